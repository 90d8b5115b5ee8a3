#include "hamur/tape.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "hamur/errors.hpp"

namespace hamur {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw dim_error(msg);
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Tape::emit(Tensor value, bool needs_grad,
               std::function<void(Tape&)> compute,
               std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.compute = std::move(compute);
  n.back = needs_grad ? std::move(back) : nullptr;
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size()) - 1;
  if (nodes_[id].compute) nodes_[id].compute(*this);
  return {id};
}

Tensor& Tape::gbuf(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

Tensor Tape::grad_or_zeros(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Tensor::zeros(n.value.shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  require(loss.valid() && nodes_[loss.id].value.size() == 1,
          "backward: loss must be a scalar");
  gbuf(loss.id)[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.back || n.grad.empty()) continue;
    n.back(*this);
  }
}

void Tape::replay() {
  for (Node& n : nodes_)
    if (n.compute) n.compute(*this);
}

void Tape::zero_grads() {
  for (Node& n : nodes_) n.grad = Tensor();
}

Var Tape::leaf(Tensor t) {
  bool ng = t.requires_grad;
  return emit(std::move(t), ng, nullptr, nullptr);
}

Var Tape::constant(Tensor t) {
  t.requires_grad = false;
  return emit(std::move(t), false, nullptr, nullptr);
}

// ---- elementwise -----------------------------------------------------

Var Tape::add(Var a, Var b) {
  const Tensor &A = val(a), &B = val(b);
  require(A.same_shape(B),
          "add: shape mismatch " + shape_str(A.shape()) + " vs " +
              shape_str(B.shape()));
  int ia = a.id, ib = b.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(A.shape()), ngrad(a) || ngrad(b),
      [=](Tape& t) {
        const Tensor &x = t.nodes_[ia].value, &y = t.nodes_[ib].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        if (t.nodes_[ia].needs_grad) {
          Tensor& ga = t.gbuf(ia);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.nodes_[ib].needs_grad) {
          Tensor& gb = t.gbuf(ib);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
      });
}

Var Tape::sub(Var a, Var b) {
  const Tensor &A = val(a), &B = val(b);
  require(A.same_shape(B),
          "sub: shape mismatch " + shape_str(A.shape()) + " vs " +
              shape_str(B.shape()));
  int ia = a.id, ib = b.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(A.shape()), ngrad(a) || ngrad(b),
      [=](Tape& t) {
        const Tensor &x = t.nodes_[ia].value, &y = t.nodes_[ib].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        if (t.nodes_[ia].needs_grad) {
          Tensor& ga = t.gbuf(ia);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.nodes_[ib].needs_grad) {
          Tensor& gb = t.gbuf(ib);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
      });
}

Var Tape::mul(Var a, Var b) {
  const Tensor &A = val(a), &B = val(b);
  require(A.same_shape(B),
          "mul: shape mismatch " + shape_str(A.shape()) + " vs " +
              shape_str(B.shape()));
  int ia = a.id, ib = b.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(A.shape()), ngrad(a) || ngrad(b),
      [=](Tape& t) {
        const Tensor &x = t.nodes_[ia].value, &y = t.nodes_[ib].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor &x = t.nodes_[ia].value, &y = t.nodes_[ib].value;
        if (t.nodes_[ia].needs_grad) {
          Tensor& ga = t.gbuf(ia);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
        }
        if (t.nodes_[ib].needs_grad) {
          Tensor& gb = t.gbuf(ib);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
        }
      });
}

Var Tape::square(Var a) {
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(val(a).shape()), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * x[i];
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.nodes_[ia].value;
        Tensor& ga = t.gbuf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * x[i] * g[i];
      });
}

Var Tape::scale(Var a, double c) {
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(val(a).shape()), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * x[i];
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.gbuf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
      });
}

Var Tape::add_scalar(Var a, double c) {
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(val(a).shape()), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + c;
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.gbuf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      });
}

// ---- broadcast over batch --------------------------------------------

static void check_rowvec(const Tensor& x, const Tensor& v, const char* op) {
  require(x.ndim() == 2 && v.ndim() == 1 && v.size() == x.dim(1),
          std::string(op) + ": want (B x h) with (h), got " +
              shape_str(x.shape()) + " vs " + shape_str(v.shape()));
}

Var Tape::add_rowvec(Var x, Var v) {
  check_rowvec(val(x), val(v), "add_rowvec");
  int ix = x.id, iv = v.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(val(x).shape()), ngrad(x) || ngrad(v),
      [=](Tape& t) {
        const Tensor &a = t.nodes_[ix].value, &b = t.nodes_[iv].value;
        Tensor& out = t.nodes_[self].value;
        std::size_t B = a.dim(0), h = a.dim(1);
        for (std::size_t i = 0; i < B; ++i)
          for (std::size_t j = 0; j < h; ++j) out(i, j) = a(i, j) + b[j];
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        std::size_t B = g.dim(0), h = g.dim(1);
        if (t.nodes_[ix].needs_grad) {
          Tensor& gx = t.gbuf(ix);
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (t.nodes_[iv].needs_grad) {
          Tensor& gv = t.gbuf(iv);
          for (std::size_t i = 0; i < B; ++i)
            for (std::size_t j = 0; j < h; ++j) gv[j] += g(i, j);
        }
      });
}

Var Tape::sub_rowvec(Var x, Var v) {
  check_rowvec(val(x), val(v), "sub_rowvec");
  int ix = x.id, iv = v.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(val(x).shape()), ngrad(x) || ngrad(v),
      [=](Tape& t) {
        const Tensor &a = t.nodes_[ix].value, &b = t.nodes_[iv].value;
        Tensor& out = t.nodes_[self].value;
        std::size_t B = a.dim(0), h = a.dim(1);
        for (std::size_t i = 0; i < B; ++i)
          for (std::size_t j = 0; j < h; ++j) out(i, j) = a(i, j) - b[j];
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        std::size_t B = g.dim(0), h = g.dim(1);
        if (t.nodes_[ix].needs_grad) {
          Tensor& gx = t.gbuf(ix);
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (t.nodes_[iv].needs_grad) {
          Tensor& gv = t.gbuf(iv);
          for (std::size_t i = 0; i < B; ++i)
            for (std::size_t j = 0; j < h; ++j) gv[j] -= g(i, j);
        }
      });
}

Var Tape::mul_rowvec(Var x, Var v) {
  check_rowvec(val(x), val(v), "mul_rowvec");
  int ix = x.id, iv = v.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(val(x).shape()), ngrad(x) || ngrad(v),
      [=](Tape& t) {
        const Tensor &a = t.nodes_[ix].value, &b = t.nodes_[iv].value;
        Tensor& out = t.nodes_[self].value;
        std::size_t B = a.dim(0), h = a.dim(1);
        for (std::size_t i = 0; i < B; ++i)
          for (std::size_t j = 0; j < h; ++j) out(i, j) = a(i, j) * b[j];
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor &a = t.nodes_[ix].value, &b = t.nodes_[iv].value;
        std::size_t B = g.dim(0), h = g.dim(1);
        if (t.nodes_[ix].needs_grad) {
          Tensor& gx = t.gbuf(ix);
          for (std::size_t i = 0; i < B; ++i)
            for (std::size_t j = 0; j < h; ++j) gx(i, j) += g(i, j) * b[j];
        }
        if (t.nodes_[iv].needs_grad) {
          Tensor& gv = t.gbuf(iv);
          for (std::size_t i = 0; i < B; ++i)
            for (std::size_t j = 0; j < h; ++j) gv[j] += g(i, j) * a(i, j);
        }
      });
}

Var Tape::row_scale(Var x, Var s) {
  const Tensor &X = val(x), &S = val(s);
  require(X.ndim() == 2 && S.ndim() == 2 && S.dim(1) == 1 &&
              S.dim(0) == X.dim(0),
          "row_scale: want (B x h) with (B x 1), got " +
              shape_str(X.shape()) + " vs " + shape_str(S.shape()));
  int ix = x.id, is = s.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(X.shape()), ngrad(x) || ngrad(s),
      [=](Tape& t) {
        const Tensor &a = t.nodes_[ix].value, &b = t.nodes_[is].value;
        Tensor& out = t.nodes_[self].value;
        std::size_t B = a.dim(0), h = a.dim(1);
        for (std::size_t i = 0; i < B; ++i)
          for (std::size_t j = 0; j < h; ++j) out(i, j) = a(i, j) * b(i, 0);
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor &a = t.nodes_[ix].value, &b = t.nodes_[is].value;
        std::size_t B = g.dim(0), h = g.dim(1);
        if (t.nodes_[ix].needs_grad) {
          Tensor& gx = t.gbuf(ix);
          for (std::size_t i = 0; i < B; ++i)
            for (std::size_t j = 0; j < h; ++j) gx(i, j) += g(i, j) * b(i, 0);
        }
        if (t.nodes_[is].needs_grad) {
          Tensor& gs = t.gbuf(is);
          for (std::size_t i = 0; i < B; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < h; ++j) acc += g(i, j) * a(i, j);
            gs(i, 0) += acc;
          }
        }
      });
}

// ---- dense products ---------------------------------------------------

Var Tape::matmul(Var a, Var b) {
  const Tensor &A = val(a), &B = val(b);
  require(A.ndim() == 2 && B.ndim() == 2 && A.dim(1) == B.dim(0),
          "matmul: shape mismatch " + shape_str(A.shape()) + " vs " +
              shape_str(B.shape()));
  std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
  int ia = a.id, ib = b.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor({m, n}), ngrad(a) || ngrad(b),
      [=](Tape& t) {
        gemm(false, false, m, n, k, 1.0, t.nodes_[ia].value.data(), k,
             t.nodes_[ib].value.data(), n, 0.0, t.nodes_[self].value.data(),
             n);
      },
      [=](Tape& t) {
        const double* g = t.nodes_[self].grad.data();
        if (t.nodes_[ia].needs_grad)
          gemm(false, true, m, k, n, 1.0, g, n, t.nodes_[ib].value.data(), n,
               1.0, t.gbuf(ia).data(), k);
        if (t.nodes_[ib].needs_grad)
          gemm(true, false, k, n, m, 1.0, t.nodes_[ia].value.data(), k, g, n,
               1.0, t.gbuf(ib).data(), n);
      });
}

Var Tape::matmul_bt(Var a, Var b) {
  const Tensor &A = val(a), &B = val(b);
  require(A.ndim() == 2 && B.ndim() == 2 && A.dim(1) == B.dim(1),
          "matmul_bt: shape mismatch " + shape_str(A.shape()) + " vs " +
              shape_str(B.shape()));
  std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(0);
  int ia = a.id, ib = b.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor({m, n}), ngrad(a) || ngrad(b),
      [=](Tape& t) {
        gemm(false, true, m, n, k, 1.0, t.nodes_[ia].value.data(), k,
             t.nodes_[ib].value.data(), k, 0.0, t.nodes_[self].value.data(),
             n);
      },
      [=](Tape& t) {
        const double* g = t.nodes_[self].grad.data();
        if (t.nodes_[ia].needs_grad)
          gemm(false, false, m, k, n, 1.0, g, n, t.nodes_[ib].value.data(), k,
               1.0, t.gbuf(ia).data(), k);
        if (t.nodes_[ib].needs_grad)
          gemm(true, false, n, k, m, 1.0, g, n, t.nodes_[ia].value.data(), k,
               1.0, t.gbuf(ib).data(), k);
      });
}

Var Tape::bmv(Var a, Var x) {
  const Tensor &A = val(a), &X = val(x);
  require(A.ndim() == 3 && X.ndim() == 2 && A.dim(0) == X.dim(0) &&
              A.dim(2) == X.dim(1),
          "bmv: shape mismatch " + shape_str(A.shape()) + " vs " +
              shape_str(X.shape()));
  std::size_t b = A.dim(0), p = A.dim(1), q = A.dim(2);
  int ia = a.id, ix = x.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor({b, p}), ngrad(a) || ngrad(x),
      [=](Tape& t) {
        const Tensor &M = t.nodes_[ia].value, &v = t.nodes_[ix].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < b; ++i)
          for (std::size_t r = 0; r < p; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < q; ++c) acc += M(i, r, c) * v(i, c);
            out(i, r) = acc;
          }
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor &M = t.nodes_[ia].value, &v = t.nodes_[ix].value;
        if (t.nodes_[ia].needs_grad) {
          Tensor& ga = t.gbuf(ia);
          for (std::size_t i = 0; i < b; ++i)
            for (std::size_t r = 0; r < p; ++r) {
              double gr = g(i, r);
              if (gr == 0.0) continue;
              for (std::size_t c = 0; c < q; ++c)
                ga(i, r, c) += gr * v(i, c);
            }
        }
        if (t.nodes_[ix].needs_grad) {
          Tensor& gx = t.gbuf(ix);
          for (std::size_t i = 0; i < b; ++i)
            for (std::size_t r = 0; r < p; ++r) {
              double gr = g(i, r);
              if (gr == 0.0) continue;
              for (std::size_t c = 0; c < q; ++c)
                gx(i, c) += M(i, r, c) * gr;
            }
        }
      });
}

Var Tape::lmm(Var w, Var a) {
  const Tensor &W = val(w), &A = val(a);
  require(W.ndim() == 2 && A.ndim() == 3 && W.dim(1) == A.dim(1),
          "lmm: shape mismatch " + shape_str(W.shape()) + " vs " +
              shape_str(A.shape()));
  std::size_t p = W.dim(0), q = W.dim(1), b = A.dim(0), r = A.dim(2);
  int iw = w.id, ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor({b, p, r}), ngrad(w) || ngrad(a),
      [=](Tape& t) {
        const Tensor &Wv = t.nodes_[iw].value, &Av = t.nodes_[ia].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < b; ++i)
          gemm(false, false, p, r, q, 1.0, Wv.data(), q,
               Av.data() + i * q * r, r, 0.0, out.data() + i * p * r, r);
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor &Wv = t.nodes_[iw].value, &Av = t.nodes_[ia].value;
        if (t.nodes_[iw].needs_grad) {
          Tensor& gw = t.gbuf(iw);
          for (std::size_t i = 0; i < b; ++i)
            gemm(false, true, p, q, r, 1.0, g.data() + i * p * r, r,
                 Av.data() + i * q * r, r, 1.0, gw.data(), q);
        }
        if (t.nodes_[ia].needs_grad) {
          Tensor& ga = t.gbuf(ia);
          for (std::size_t i = 0; i < b; ++i)
            gemm(true, false, q, r, p, 1.0, Wv.data(), q,
                 g.data() + i * p * r, r, 1.0, ga.data() + i * q * r, r);
        }
      });
}

Var Tape::rmm(Var a, Var w) {
  const Tensor &A = val(a), &W = val(w);
  require(A.ndim() == 3 && W.ndim() == 2 && A.dim(2) == W.dim(0),
          "rmm: shape mismatch " + shape_str(A.shape()) + " vs " +
              shape_str(W.shape()));
  std::size_t b = A.dim(0), p = A.dim(1), q = A.dim(2), r = W.dim(1);
  int ia = a.id, iw = w.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor({b, p, r}), ngrad(a) || ngrad(w),
      [=](Tape& t) {
        const Tensor &Av = t.nodes_[ia].value, &Wv = t.nodes_[iw].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < b; ++i)
          gemm(false, false, p, r, q, 1.0, Av.data() + i * p * q, q,
               Wv.data(), r, 0.0, out.data() + i * p * r, r);
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor &Av = t.nodes_[ia].value, &Wv = t.nodes_[iw].value;
        if (t.nodes_[ia].needs_grad) {
          Tensor& ga = t.gbuf(ia);
          for (std::size_t i = 0; i < b; ++i)
            gemm(false, true, p, q, r, 1.0, g.data() + i * p * r, r,
                 Wv.data(), r, 1.0, ga.data() + i * p * q, q);
        }
        if (t.nodes_[iw].needs_grad) {
          Tensor& gw = t.gbuf(iw);
          for (std::size_t i = 0; i < b; ++i)
            gemm(true, false, q, r, p, 1.0, Av.data() + i * p * q, q,
                 g.data() + i * p * r, r, 1.0, gw.data(), r);
        }
      });
}

// ---- nonlinearities ---------------------------------------------------

Var Tape::sigmoid(Var a) {
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(val(a).shape()), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < out.size(); ++i)
          out[i] = stable_sigmoid(x[i]);
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& s = t.nodes_[self].value;
        Tensor& ga = t.gbuf(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += g[i] * s[i] * (1.0 - s[i]);
      });
}

Var Tape::relu(Var a) {
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(val(a).shape()), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < out.size(); ++i)
          out[i] = x[i] > 0.0 ? x[i] : 0.0;
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.nodes_[ia].value;
        Tensor& ga = t.gbuf(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (x[i] > 0.0) ga[i] += g[i];
      });
}

Var Tape::log(Var a) {
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(val(a).shape()), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(x[i]);
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.nodes_[ia].value;
        Tensor& ga = t.gbuf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
      });
}

Var Tape::rsqrt_shift(Var a, double eps) {
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(val(a).shape()), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < out.size(); ++i)
          out[i] = 1.0 / std::sqrt(x[i] + eps);
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.nodes_[self].value;
        Tensor& ga = t.gbuf(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += -0.5 * y[i] * y[i] * y[i] * g[i];
      });
}

Var Tape::clip(Var a, double lo, double hi) {
  require(lo < hi, "clip: empty interval");
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(val(a).shape()), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < out.size(); ++i)
          out[i] = x[i] < lo ? lo : (x[i] > hi ? hi : x[i]);
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.nodes_[ia].value;
        Tensor& ga = t.gbuf(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (x[i] > lo && x[i] < hi) ga[i] += g[i];
      });
}

// ---- structure ---------------------------------------------------------

Var Tape::reshape(Var a, std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  require(n == val(a).size(), "reshape: " + shape_str(val(a).shape()) +
                                  " to incompatible " + shape_str(shape));
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor(shape), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i];
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.gbuf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  std::size_t B = val(parts[0]).dim(0), w = 0;
  bool ng = false;
  std::vector<int> ids;
  std::vector<std::size_t> widths;
  for (Var p : parts) {
    const Tensor& T = val(p);
    require(T.ndim() == 2 && T.dim(0) == B,
            "concat_cols: row mismatch, got " + shape_str(T.shape()) +
                " with batch " + std::to_string(B));
    ids.push_back(p.id);
    widths.push_back(T.dim(1));
    w += T.dim(1);
    ng = ng || ngrad(p);
  }
  int self = static_cast<int>(nodes_.size());
  return emit(
      Tensor({B, w}), ng,
      [=](Tape& t) {
        Tensor& out = t.nodes_[self].value;
        std::size_t off = 0;
        for (std::size_t pi = 0; pi < ids.size(); ++pi) {
          const Tensor& x = t.nodes_[ids[pi]].value;
          for (std::size_t i = 0; i < B; ++i)
            for (std::size_t j = 0; j < widths[pi]; ++j)
              out(i, off + j) = x(i, j);
          off += widths[pi];
        }
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        std::size_t off = 0;
        for (std::size_t pi = 0; pi < ids.size(); ++pi) {
          if (t.nodes_[ids[pi]].needs_grad) {
            Tensor& gp = t.gbuf(ids[pi]);
            for (std::size_t i = 0; i < B; ++i)
              for (std::size_t j = 0; j < widths[pi]; ++j)
                gp(i, j) += g(i, off + j);
          }
          off += widths[pi];
        }
      });
}

Var Tape::rows(Var a, std::vector<std::size_t> ids) {
  const Tensor& A = val(a);
  require(A.ndim() == 2, "rows: want 2-d table, got " + shape_str(A.shape()));
  for (std::size_t id : ids)
    require(id < A.dim(0), "rows: index " + std::to_string(id) +
                               " out of range for " + shape_str(A.shape()));
  std::size_t n = ids.size(), w = A.dim(1);
  auto idx = std::make_shared<const std::vector<std::size_t>>(std::move(ids));
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor({n, w}), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < w; ++j) out(i, j) = x((*idx)[i], j);
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.gbuf(ia);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < w; ++j) ga((*idx)[i], j) += g(i, j);
      });
}

Var Tape::scatter_rows(const std::vector<Var>& parts,
                       const std::vector<std::vector<std::size_t>>& index,
                       std::size_t total_rows) {
  require(!parts.empty() && parts.size() == index.size(),
          "scatter_rows: parts/index count mismatch");
  std::size_t w = val(parts[0]).dim(1);
  bool ng = false;
  std::vector<int> ids;
  std::vector<char> seen(total_rows, 0);
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const Tensor& T = val(parts[j]);
    require(T.ndim() == 2 && T.dim(1) == w &&
                T.dim(0) == index[j].size(),
            "scatter_rows: part " + std::to_string(j) + " shape " +
                shape_str(T.shape()) + " does not match its index list");
    for (std::size_t r : index[j]) {
      require(r < total_rows && !seen[r],
              "scatter_rows: index lists must partition the batch");
      seen[r] = 1;
    }
    ids.push_back(parts[j].id);
    ng = ng || ngrad(parts[j]);
  }
  for (char c : seen)
    require(c == 1, "scatter_rows: index lists must partition the batch");
  auto idx =
      std::make_shared<const std::vector<std::vector<std::size_t>>>(index);
  int self = static_cast<int>(nodes_.size());
  return emit(
      Tensor({total_rows, w}), ng,
      [=](Tape& t) {
        Tensor& out = t.nodes_[self].value;
        for (std::size_t pi = 0; pi < ids.size(); ++pi) {
          const Tensor& x = t.nodes_[ids[pi]].value;
          const auto& list = (*idx)[pi];
          for (std::size_t i = 0; i < list.size(); ++i)
            for (std::size_t j = 0; j < w; ++j) out(list[i], j) = x(i, j);
        }
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        for (std::size_t pi = 0; pi < ids.size(); ++pi) {
          if (!t.nodes_[ids[pi]].needs_grad) continue;
          Tensor& gp = t.gbuf(ids[pi]);
          const auto& list = (*idx)[pi];
          for (std::size_t i = 0; i < list.size(); ++i)
            for (std::size_t j = 0; j < w; ++j) gp(i, j) += g(list[i], j);
        }
      });
}

// ---- reductions ----------------------------------------------------------

Var Tape::col_mean(Var a) {
  const Tensor& A = val(a);
  require(A.ndim() == 2 && A.dim(0) >= 1,
          "col_mean: want non-empty (B x h), got " + shape_str(A.shape()));
  std::size_t B = A.dim(0), h = A.dim(1);
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor({h}), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        Tensor& out = t.nodes_[self].value;
        for (std::size_t j = 0; j < h; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < B; ++i) acc += x(i, j);
          out[j] = acc / static_cast<double>(B);
        }
      },
      [=](Tape& t) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.gbuf(ia);
        double inv = 1.0 / static_cast<double>(B);
        for (std::size_t i = 0; i < B; ++i)
          for (std::size_t j = 0; j < h; ++j) ga(i, j) += g[j] * inv;
      });
}

Var Tape::sum_all(Var a) {
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor({1}), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += x[i];
        t.nodes_[self].value[0] = acc;
      },
      [=](Tape& t) {
        double g = t.nodes_[self].grad[0];
        Tensor& ga = t.gbuf(ia);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
      });
}

Var Tape::mean_all(Var a) {
  std::size_t n = val(a).size();
  require(n >= 1, "mean_all: empty input");
  int ia = a.id, self = static_cast<int>(nodes_.size());
  return emit(
      Tensor({1}), ngrad(a),
      [=](Tape& t) {
        const Tensor& x = t.nodes_[ia].value;
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += x[i];
        t.nodes_[self].value[0] = acc / static_cast<double>(n);
      },
      [=](Tape& t) {
        double g = t.nodes_[self].grad[0] / static_cast<double>(n);
        Tensor& ga = t.gbuf(ia);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
      });
}

std::pair<Var, Var> batch_stats(Tape& t, Var x) {
  const Tensor& X = t.val(x);
  if (X.ndim() != 2 || X.dim(0) < 1)
    throw dim_error("batch_stats: want non-empty (B x h), got " +
                    shape_str(X.shape()));
  Var mean = t.col_mean(x);
  Var var = t.col_mean(t.square(t.sub_rowvec(x, mean)));
  return {mean, var};
}

}  // namespace hamur
