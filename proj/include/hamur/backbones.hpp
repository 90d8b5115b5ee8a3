#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hamur/binding.hpp"
#include "hamur/dataio.hpp"
#include "hamur/rng.hpp"
#include "hamur/tape.hpp"

namespace hamur {

enum class BackboneKind { mlp, dcn, wide_deep };

const char* backbone_kind_name(BackboneKind k);
BackboneKind parse_backbone_kind(const std::string& name);  // config_error

// Architecture of one per-domain tower. sites are 1-based hidden-layer
// indices: site p applies the adapter transform to the activation of
// hidden layer p (the hook fires there). For dcn and wide_deep the sites
// live in the deep tower. widths may be empty for mlp, which degenerates
// to a linear model over the embedding.
struct BackboneSpec {
  BackboneKind kind = BackboneKind::mlp;
  std::vector<std::size_t> widths;
  std::size_t cross_layers = 0;  // dcn only
  std::vector<std::size_t> sites;

  std::size_t site_width(std::size_t ordinal) const;
  void validate() const;  // throws config_error naming the problem
};

// Called at each adapter site with the hidden state (b x width); returns
// the transformed state of identical shape. ordinal indexes into sites.
using AdapterHook = std::function<Var(Tape&, Var, std::size_t ordinal)>;

// Registers the trainable tensors of one tower under a prefix like
// "bb/d1". Wide tables exist only for wide_deep.
void build_backbone_params(ParamStore& store, const std::string& prefix,
                           const BackboneSpec& spec, std::size_t in_width,
                           const DatasetSpec& data_spec, Rng& rng);

// Forward pass to logits (b x 1). z is the concatenated embedding
// (b x in_width); slice supplies raw category ids for the wide part and is
// only consulted for wide_deep. hook may be empty (no adapters).
Var backbone_forward(Tape& t, const LeafMap& lm, const std::string& prefix,
                     const BackboneSpec& spec, Var z,
                     const DomainSlice* slice, const DatasetSpec& data_spec,
                     const AdapterHook& hook);

}  // namespace hamur
