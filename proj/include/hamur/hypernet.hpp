#pragma once

#include <string>
#include <utility>

#include "hamur/binding.hpp"
#include "hamur/rng.hpp"
#include "hamur/tape.hpp"

namespace hamur {

// The instance-conditioned weight generator shared by all domains: a
// one-hidden-layer network mapping the instance embedding to a k*k
// representation matrix, plus per-(domain, site) low-rank factor pairs
// that turn the representation into adapter weights.

// Parameter names: hyper/w1 (in x m), hyper/b1 (m), hyper/w2 (m x k^2),
// hyper/b2 (k^2).
void build_hyper_params(ParamStore& store, std::size_t in_width,
                        std::size_t m, std::size_t k, Rng& rng);

// h = relu(z*w1 + b1)*w2 + b2, reshaped row-major to (B x k x k). The map
// has no per-domain branch: instances with equal embeddings get equal
// representation matrices regardless of domain.
Var represent(Tape& t, const LeafMap& lm, Var z, std::size_t k);

// Low-rank factor names under a prefix like "factors/d1/site0":
// <prefix>/w_ul (s x k), <prefix>/w_ur (k x h),
// <prefix>/w_vl (h x k), <prefix>/w_vr (k x s).
struct FactorVars {
  Var w_ul, w_ur, w_vl, w_vr;
};

void build_factor_params(ParamStore& store, const std::string& prefix,
                         std::size_t k, std::size_t s, std::size_t h,
                         Rng& rng);
FactorVars factor_vars(const LeafMap& lm, const std::string& prefix);

// Materialized per-instance adapter weights:
// U_i = w_ul * I_i * w_ur of shape (s x h), V_i = w_vl * I_i * w_vr of
// shape (h x s). Linear in I.
std::pair<Var, Var> generate_adapter_weights(Tape& t, Var I,
                                             const FactorVars& f);

}  // namespace hamur
