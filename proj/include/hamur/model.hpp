#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hamur/adapter.hpp"
#include "hamur/backbones.hpp"
#include "hamur/binding.hpp"
#include "hamur/dataio.hpp"
#include "hamur/embedding.hpp"
#include "hamur/hypernet.hpp"

namespace hamur {

struct ModelConfig {
  BackboneSpec backbone;
  std::size_t e = 16;  // embedding size
  std::size_t s = 32;  // adapter bottleneck
  std::size_t m = 64;  // hyper-network hidden width
  std::size_t k = 35;  // representation matrix dimension
  bool adapters = true;
  // Routes every domain through one tower (a plain shared model); only
  // meaningful with adapters off.
  bool shared_backbone = false;
  DnOptions dn;

  void validate(const DatasetSpec& data) const;  // config_error on bad combo
};

// The full multi-domain model: shared embeddings, one shared hyper-network,
// per-domain towers, and per-(domain, site) low-rank factors plus
// normalization state.
class HamurModel {
 public:
  HamurModel(DatasetSpec data_spec, ModelConfig cfg, std::uint64_t seed);

  const DatasetSpec& data_spec() const { return data_; }
  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  std::size_t in_width() const { return data_.num_fields() * cfg_.e; }

  // Closed-form count of trainable values implied by the config alone.
  std::size_t expected_param_values() const;

  // Builds the graph for one batch; returns predictions (B x 1) aligned to
  // batch order. Train mode updates each touched domain's running stats.
  Var forward_batch(Tape& t, const LeafMap& lm, const Batch& batch,
                    bool train);

  // Eval-mode predictions over a dataset, processed in chunks.
  std::vector<double> predict(const Dataset& ds, std::size_t chunk = 4096);

  // All persistent state in canonical order: every parameter, then the
  // running stats ("dn/d{d}/site{j}/running_mean" / ".../running_var").
  std::vector<std::pair<std::string, Tensor*>> state_tensors();

  struct Snapshot {
    std::vector<Tensor> tensors;
  };
  Snapshot snapshot();
  void restore(const Snapshot& s);

 private:
  DatasetSpec data_;
  ModelConfig cfg_;
  ParamStore store_;
  std::vector<std::vector<RunningStats>> run_;  // [domain][site ordinal]

  std::size_t num_towers() const;
  std::string tower_prefix(std::size_t domain) const;
};

// Mean of -y*log(p) - (1-y)*log(1-p) with p clipped to [1e-7, 1 - 1e-7].
// preds is (B x 1); labels has B entries in {0, 1}.
Var bce_loss(Tape& t, Var preds, const std::vector<double>& labels);

}  // namespace hamur
