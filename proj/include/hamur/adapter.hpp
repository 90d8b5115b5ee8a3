#pragma once

#include <string>

#include "hamur/binding.hpp"
#include "hamur/hypernet.hpp"
#include "hamur/tape.hpp"

namespace hamur {

// Non-trainable normalization statistics for one (domain, site) pair.
// Train-mode forwards update them from that domain's sub-batches only.
struct RunningStats {
  Tensor mean, var;
  explicit RunningStats(std::size_t h)
      : mean(Tensor::zeros({h})), var(Tensor::ones({h})) {}
  RunningStats() = default;
};

struct DnOptions {
  double rho = 0.9;    // running-stat momentum
  double eps = 1e-5;
  bool detach_stats = false;  // stop-gradient through batch mean/var
};

// Trainable scale/bias names under a prefix like "dn/d1/site0":
// <prefix>/gamma (h, ones), <prefix>/beta (h, zeros).
void build_dn_params(ParamStore& store, const std::string& prefix,
                     std::size_t h);

struct DnVars {
  Var gamma, beta;
};
DnVars dn_vars(const LeafMap& lm, const std::string& prefix);

// gamma * (x - mu) / sqrt(var + eps) + beta. Train mode normalizes by this
// sub-batch's statistics (differentiable unless detach_stats) and then
// folds them into the running stats; eval mode uses the running stats.
// Callers must not pass an empty sub-batch (skip it instead).
Var domain_norm(Tape& t, Var x, const DnVars& dn, RunningStats& rs,
                bool train, const DnOptions& opt);

// Full adapter cell with materialized per-instance weights:
// y_i = DN(V_i * sigmoid(U_i * x_i)) + x_i, shapes x (b x h),
// U (b x s x h), V (b x h x s).
Var adapter_forward(Tape& t, Var x, Var U, Var V, const DnVars& dn,
                    RunningStats& rs, bool train, const DnOptions& opt);

// Same cell, but applies the low-rank factors directly against the
// activations instead of materializing U_i and V_i:
//   U_i x_i = w_ul (I_i (w_ur x_i)),  V_i a_i = w_vl (I_i (w_vr a_i)).
// Equal to the materialized route up to floating-point associativity; the
// flop count drops from O(s*h*k + s*h) to O((s + h + k) * k) per instance.
Var adapter_forward_factored(Tape& t, Var x, Var I, const FactorVars& f,
                             const DnVars& dn, RunningStats& rs, bool train,
                             const DnOptions& opt);

}  // namespace hamur
