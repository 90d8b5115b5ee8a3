#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>

#include "hamur/tensor.hpp"

namespace hamur {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment buffers are allocated on the first step. The step counter is per
// state object; a parameter can therefore be skipped in steps where it got
// no gradient without stalling everyone else's bias correction.
struct AdamState {
  Tensor m, v;
  std::uint64_t t = 0;
};

// Standard Adam update with bias correction, in place.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state,
               const AdamConfig& cfg);

struct Parameter {
  std::string name;
  Tensor value;
  AdamState opt;
};

// Name-addressable set of trainable tensors. Insertion order is stable and
// defines the checkpoint record order. Backed by a deque so references
// returned by add() stay valid.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Tensor init);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  int index_of(const std::string& name) const;  // -1 if absent

  std::deque<Parameter>& items() { return items_; }
  const std::deque<Parameter>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::size_t total_values() const;

 private:
  std::deque<Parameter> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace hamur
