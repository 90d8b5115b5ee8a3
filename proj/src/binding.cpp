#include "hamur/binding.hpp"

#include "hamur/errors.hpp"

namespace hamur {

LeafMap::LeafMap(Tape& t, ParamStore& store, bool train)
    : tape_(&t), store_(&store) {
  vars_.reserve(store.size());
  for (Parameter& p : store.items()) {
    Tensor v = p.value;
    v.requires_grad = train;
    vars_.push_back(tape_->leaf(std::move(v)));
  }
}

Var LeafMap::operator[](const std::string& name) const {
  int i = store_->index_of(name);
  if (i < 0) throw dim_error("LeafMap: no parameter named " + name);
  return vars_[static_cast<std::size_t>(i)];
}

std::size_t LeafMap::apply_adam(const AdamConfig& cfg) {
  std::size_t updated = 0;
  std::size_t i = 0;
  for (Parameter& p : store_->items()) {
    const Tensor& g = tape_->grad(vars_[i]);
    if (!g.empty()) {
      adam_step(p.value, g, p.opt, cfg);
      ++updated;
    }
    ++i;
  }
  return updated;
}

}  // namespace hamur
