#include "hamur/adam.hpp"

#include <cmath>

#include "hamur/errors.hpp"

namespace hamur {

void adam_step(Tensor& param, const Tensor& grad, AdamState& state,
               const AdamConfig& cfg) {
  if (!param.same_shape(grad))
    throw dim_error("adam_step: param " + shape_str(param.shape()) +
                    " vs grad " + shape_str(grad.shape()));
  if (state.m.empty()) {
    state.m = Tensor::zeros(param.shape());
    state.v = Tensor::zeros(param.shape());
  } else if (!state.m.same_shape(param)) {
    throw dim_error("adam_step: state " + shape_str(state.m.shape()) +
                    " vs param " + shape_str(param.shape()));
  }
  state.t += 1;
  double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    double mhat = state.m[i] / c1;
    double vhat = state.v[i] / c2;
    param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Parameter& ParamStore::add(const std::string& name, Tensor init) {
  if (index_.count(name))
    throw dim_error("ParamStore: duplicate parameter " + name);
  index_[name] = items_.size();
  items_.push_back(Parameter{name, std::move(init), {}});
  return items_.back();
}

Parameter* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &items_[it->second];
}

const Parameter* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &items_[it->second];
}

Parameter& ParamStore::at(const std::string& name) {
  Parameter* p = find(name);
  if (!p) throw dim_error("ParamStore: no parameter named " + name);
  return *p;
}

const Parameter& ParamStore::at(const std::string& name) const {
  const Parameter* p = find(name);
  if (!p) throw dim_error("ParamStore: no parameter named " + name);
  return *p;
}

int ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : static_cast<int>(it->second);
}

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (const Parameter& p : items_) n += p.value.size();
  return n;
}

}  // namespace hamur
