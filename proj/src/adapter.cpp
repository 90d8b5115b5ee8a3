#include "hamur/adapter.hpp"

#include "hamur/errors.hpp"

namespace hamur {

void build_dn_params(ParamStore& store, const std::string& prefix,
                     std::size_t h) {
  store.add(prefix + "/gamma", Tensor::ones({h}));
  store.add(prefix + "/beta", Tensor::zeros({h}));
}

DnVars dn_vars(const LeafMap& lm, const std::string& prefix) {
  return DnVars{lm[prefix + "/gamma"], lm[prefix + "/beta"]};
}

Var domain_norm(Tape& t, Var x, const DnVars& dn, RunningStats& rs,
                bool train, const DnOptions& opt) {
  const Tensor& X = t.val(x);
  if (X.ndim() != 2 || X.dim(0) == 0)
    throw dim_error("domain_norm: want non-empty (b x h), got " +
                    shape_str(X.shape()));
  std::size_t h = X.dim(1);
  if (rs.mean.size() != h)
    throw dim_error("domain_norm: stats width " +
                    std::to_string(rs.mean.size()) + " vs input width " +
                    std::to_string(h));
  Var mu, var;
  if (train) {
    auto [m, v] = batch_stats(t, x);
    if (opt.detach_stats) {
      mu = t.constant(t.val(m));
      var = t.constant(t.val(v));
    } else {
      mu = m;
      var = v;
    }
    const Tensor &mv = t.val(m), &vv = t.val(v);
    for (std::size_t j = 0; j < h; ++j) {
      rs.mean[j] = opt.rho * rs.mean[j] + (1.0 - opt.rho) * mv[j];
      rs.var[j] = opt.rho * rs.var[j] + (1.0 - opt.rho) * vv[j];
    }
  } else {
    mu = t.constant(rs.mean);
    var = t.constant(rs.var);
  }
  Var xhat = t.mul_rowvec(t.sub_rowvec(x, mu), t.rsqrt_shift(var, opt.eps));
  return t.add_rowvec(t.mul_rowvec(xhat, dn.gamma), dn.beta);
}

Var adapter_forward(Tape& t, Var x, Var U, Var V, const DnVars& dn,
                    RunningStats& rs, bool train, const DnOptions& opt) {
  const Tensor &X = t.val(x), &Uv = t.val(U), &Vv = t.val(V);
  if (X.ndim() != 2 || Uv.ndim() != 3 || Uv.dim(0) != X.dim(0) ||
      Uv.dim(2) != X.dim(1))
    throw dim_error("adapter_forward: x " + shape_str(X.shape()) + " vs U " +
                    shape_str(Uv.shape()));
  if (Vv.ndim() != 3 || Vv.dim(0) != X.dim(0) || Vv.dim(1) != X.dim(1) ||
      Vv.dim(2) != Uv.dim(1))
    throw dim_error("adapter_forward: x " + shape_str(X.shape()) + " vs V " +
                    shape_str(Vv.shape()));
  Var a = t.sigmoid(t.bmv(U, x));
  Var up = t.bmv(V, a);
  return t.add(domain_norm(t, up, dn, rs, train, opt), x);
}

Var adapter_forward_factored(Tape& t, Var x, Var I, const FactorVars& f,
                             const DnVars& dn, RunningStats& rs, bool train,
                             const DnOptions& opt) {
  Var a = t.sigmoid(t.matmul_bt(t.bmv(I, t.matmul_bt(x, f.w_ur)), f.w_ul));
  Var up = t.matmul_bt(t.bmv(I, t.matmul_bt(a, f.w_vr)), f.w_vl);
  return t.add(domain_norm(t, up, dn, rs, train, opt), x);
}

}  // namespace hamur
