#include "hamur/hypernet.hpp"

#include <cmath>

#include "hamur/errors.hpp"

namespace hamur {

namespace {

Tensor uniform_init(std::vector<std::size_t> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

void build_hyper_params(ParamStore& store, std::size_t in_width,
                        std::size_t m, std::size_t k, Rng& rng) {
  double b1 = 1.0 / std::sqrt(static_cast<double>(in_width));
  double b2 = 1.0 / std::sqrt(static_cast<double>(m));
  store.add("hyper/w1", uniform_init({in_width, m}, b1, rng));
  store.add("hyper/b1", Tensor::zeros({m}));
  store.add("hyper/w2", uniform_init({m, k * k}, b2, rng));
  store.add("hyper/b2", Tensor::zeros({k * k}));
}

Var represent(Tape& t, const LeafMap& lm, Var z, std::size_t k) {
  Var w1 = lm["hyper/w1"];
  // Read shape facts up front: adding nodes may invalidate val() references.
  if (t.val(z).ndim() != 2 || t.val(z).dim(1) != t.val(w1).dim(0))
    throw dim_error("represent: input " + shape_str(t.val(z).shape()) +
                    " does not match hyper/w1 " +
                    shape_str(t.val(w1).shape()));
  const std::size_t B = t.val(z).dim(0);
  Var hidden = t.relu(t.add_rowvec(t.matmul(z, w1), lm["hyper/b1"]));
  Var out = t.add_rowvec(t.matmul(hidden, lm["hyper/w2"]), lm["hyper/b2"]);
  return t.reshape(out, {B, k, k});
}

void build_factor_params(ParamStore& store, const std::string& prefix,
                         std::size_t k, std::size_t s, std::size_t h,
                         Rng& rng) {
  double b = 1.0 / std::sqrt(static_cast<double>(k));
  store.add(prefix + "/w_ul", uniform_init({s, k}, b, rng));
  store.add(prefix + "/w_ur", uniform_init({k, h}, b, rng));
  store.add(prefix + "/w_vl", uniform_init({h, k}, b, rng));
  store.add(prefix + "/w_vr", uniform_init({k, s}, b, rng));
}

FactorVars factor_vars(const LeafMap& lm, const std::string& prefix) {
  return FactorVars{lm[prefix + "/w_ul"], lm[prefix + "/w_ur"],
                    lm[prefix + "/w_vl"], lm[prefix + "/w_vr"]};
}

std::pair<Var, Var> generate_adapter_weights(Tape& t, Var I,
                                             const FactorVars& f) {
  const Tensor& Iv = t.val(I);
  if (Iv.ndim() != 3 || Iv.dim(1) != Iv.dim(2))
    throw dim_error("generate_adapter_weights: representation must be " +
                    std::string("(B x k x k), got ") + shape_str(Iv.shape()));
  Var U = t.rmm(t.lmm(f.w_ul, I), f.w_ur);  // (B x s x h)
  Var V = t.rmm(t.lmm(f.w_vl, I), f.w_vr);  // (B x h x s)
  return {U, V};
}

}  // namespace hamur
