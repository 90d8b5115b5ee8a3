#pragma once

#include "hamur/adam.hpp"
#include "hamur/tape.hpp"

namespace hamur {

// Per-step binding of a parameter store onto a tape: every parameter gets
// a leaf, trainable only when train is set. After backward(), apply_adam
// updates exactly the parameters whose leaves received gradient; the rest
// (including their Adam state) stay bit-unchanged.
class LeafMap {
 public:
  LeafMap(Tape& t, ParamStore& store, bool train);

  Var operator[](const std::string& name) const;
  Var at_index(std::size_t i) const { return vars_[i]; }

  // Returns the number of parameters updated.
  std::size_t apply_adam(const AdamConfig& cfg);

 private:
  Tape* tape_;
  ParamStore* store_;
  std::vector<Var> vars_;  // parallel to store insertion order
};

}  // namespace hamur
