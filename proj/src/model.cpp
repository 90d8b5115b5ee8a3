#include "hamur/model.hpp"

#include <numeric>

#include "hamur/errors.hpp"
#include "hamur/rng.hpp"

namespace hamur {

void ModelConfig::validate(const DatasetSpec& data) const {
  if (e == 0) throw config_error("embedding size must be positive");
  if (data.num_domains == 0) throw config_error("need at least one domain");
  if (data.fields.empty()) throw config_error("need at least one field");
  backbone.validate();
  if (shared_backbone && adapters)
    throw config_error(
        "shared_backbone is a plain baseline; disable adapters with it");
  if (adapters) {
    if (k == 0 || s == 0 || m == 0)
      throw config_error("k, s, and hyper hidden width must be positive");
    if (backbone.sites.empty())
      throw config_error("adapters are on but no sites are set");
    for (std::size_t j = 0; j < backbone.sites.size(); ++j)
      if (s >= backbone.site_width(j))
        throw config_error(
            "bottleneck " + std::to_string(s) +
            " must be smaller than site width " +
            std::to_string(backbone.site_width(j)) + " (site " +
            std::to_string(backbone.sites[j]) + ")");
  }
}

HamurModel::HamurModel(DatasetSpec data_spec, ModelConfig cfg,
                       std::uint64_t seed)
    : data_(std::move(data_spec)), cfg_(std::move(cfg)) {
  cfg_.validate(data_);
  Rng rng(mix64(seed, 0x4d4f44));
  build_embedding_params(store_, data_, cfg_.e, rng);
  if (cfg_.adapters) build_hyper_params(store_, in_width(), cfg_.m, cfg_.k, rng);
  for (std::size_t d = 1; d <= num_towers(); ++d)
    build_backbone_params(store_, tower_prefix(d), cfg_.backbone, in_width(),
                          data_, rng);
  if (cfg_.adapters) {
    for (std::size_t d = 1; d <= data_.num_domains; ++d) {
      for (std::size_t j = 0; j < cfg_.backbone.sites.size(); ++j) {
        std::string tag =
            "d" + std::to_string(d) + "/site" + std::to_string(j);
        build_factor_params(store_, "factors/" + tag, cfg_.k, cfg_.s,
                            cfg_.backbone.site_width(j), rng);
        build_dn_params(store_, "dn/" + tag, cfg_.backbone.site_width(j));
      }
    }
    run_.resize(data_.num_domains);
    for (auto& sites : run_) {
      sites.reserve(cfg_.backbone.sites.size());
      for (std::size_t j = 0; j < cfg_.backbone.sites.size(); ++j)
        sites.emplace_back(cfg_.backbone.site_width(j));
    }
  }
}

std::size_t HamurModel::num_towers() const {
  return cfg_.shared_backbone ? 1 : data_.num_domains;
}

std::string HamurModel::tower_prefix(std::size_t domain) const {
  return "bb/d" + std::to_string(cfg_.shared_backbone ? 1 : domain);
}

std::size_t HamurModel::expected_param_values() const {
  std::size_t n = 0;
  for (const FeatureField& f : data_.fields) n += f.vocab * cfg_.e;
  std::size_t in = in_width();
  if (cfg_.adapters) {
    std::size_t kk = cfg_.k * cfg_.k;
    n += in * cfg_.m + cfg_.m + cfg_.m * kk + kk;
  }
  const BackboneSpec& bb = cfg_.backbone;
  std::size_t tower = 0, w = in;
  for (std::size_t wi : bb.widths) {
    tower += w * wi + wi;
    w = wi;
  }
  switch (bb.kind) {
    case BackboneKind::mlp:
      tower += w + 1;
      break;
    case BackboneKind::dcn:
      tower += bb.cross_layers * (in + in) + (in + w) + 1;
      break;
    case BackboneKind::wide_deep:
      for (const FeatureField& f : data_.fields) tower += f.vocab;
      tower += 1 + w + 1;
      break;
  }
  n += tower * num_towers();
  if (cfg_.adapters) {
    for (std::size_t j = 0; j < bb.sites.size(); ++j) {
      std::size_t h = bb.site_width(j);
      std::size_t per_site = cfg_.s * cfg_.k + cfg_.k * h + h * cfg_.k +
                             cfg_.k * cfg_.s + 2 * h;
      n += per_site * data_.num_domains;
    }
  }
  return n;
}

Var HamurModel::forward_batch(Tape& t, const LeafMap& lm, const Batch& batch,
                              bool train) {
  if (batch.num_fields != data_.num_fields())
    throw dim_error("forward_batch: batch has " +
                    std::to_string(batch.num_fields) + " fields, spec has " +
                    std::to_string(data_.num_fields()));
  if (batch.domains.size() > data_.num_domains)
    throw dim_error("forward_batch: batch mentions domain " +
                    std::to_string(batch.domains.size()) +
                    " but model has " + std::to_string(data_.num_domains));
  std::vector<Var> parts;
  std::vector<std::vector<std::size_t>> lists;
  for (std::size_t d = 1; d <= batch.domains.size(); ++d) {
    const DomainSlice& slice = batch.domains[d - 1];
    if (slice.batch_rows.empty()) continue;
    std::size_t b = slice.batch_rows.size();
    Var z = embed_batch(t, lm, data_, slice.ids, b);
    AdapterHook hook;
    if (cfg_.adapters) {
      Var I = represent(t, lm, z, cfg_.k);
      hook = [this, &t, &lm, I, d, train](Tape&, Var x,
                                          std::size_t ordinal) {
        std::string tag =
            "d" + std::to_string(d) + "/site" + std::to_string(ordinal);
        return adapter_forward_factored(
            t, x, I, factor_vars(lm, "factors/" + tag),
            dn_vars(lm, "dn/" + tag), run_[d - 1][ordinal], train, cfg_.dn);
      };
    }
    Var logits = backbone_forward(t, lm, tower_prefix(d), cfg_.backbone, z,
                                  &slice, data_, hook);
    parts.push_back(t.sigmoid(logits));
    lists.push_back(slice.batch_rows);
  }
  if (parts.empty()) throw dim_error("forward_batch: empty batch");
  if (parts.size() == 1 && lists[0].size() == batch.size) return parts[0];
  return t.scatter_rows(parts, lists, batch.size);
}

std::vector<double> HamurModel::predict(const Dataset& ds,
                                        std::size_t chunk) {
  std::vector<double> out;
  out.reserve(ds.size());
  for (std::size_t start = 0; start < ds.size(); start += chunk) {
    std::size_t end = std::min(start + chunk, ds.size());
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    Batch b = make_batch(ds, idx);
    Tape t;
    LeafMap lm(t, store_, false);
    Var preds = forward_batch(t, lm, b, false);
    const Tensor& p = t.val(preds);
    for (std::size_t i = 0; i < p.size(); ++i) out.push_back(p[i]);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor*>> HamurModel::state_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (Parameter& p : store_.items()) out.emplace_back(p.name, &p.value);
  for (std::size_t d = 1; d <= run_.size(); ++d) {
    for (std::size_t j = 0; j < run_[d - 1].size(); ++j) {
      std::string tag =
          "dn/d" + std::to_string(d) + "/site" + std::to_string(j);
      out.emplace_back(tag + "/running_mean", &run_[d - 1][j].mean);
      out.emplace_back(tag + "/running_var", &run_[d - 1][j].var);
    }
  }
  return out;
}

HamurModel::Snapshot HamurModel::snapshot() {
  Snapshot s;
  for (auto& [name, t] : state_tensors()) s.tensors.push_back(*t);
  return s;
}

void HamurModel::restore(const Snapshot& s) {
  auto state = state_tensors();
  if (s.tensors.size() != state.size())
    throw dim_error("restore: snapshot has " +
                    std::to_string(s.tensors.size()) + " tensors, model " +
                    std::to_string(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) *state[i].second = s.tensors[i];
}

Var bce_loss(Tape& t, Var preds, const std::vector<double>& labels) {
  const Tensor& P = t.val(preds);
  if (P.ndim() != 2 || P.dim(1) != 1 || P.dim(0) != labels.size())
    throw dim_error("bce_loss: predictions " + shape_str(P.shape()) +
                    " vs " + std::to_string(labels.size()) + " labels");
  Tensor y({labels.size(), 1});
  Tensor ym({labels.size(), 1});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = labels[i];
    ym[i] = 1.0 - labels[i];
  }
  Var p = t.clip(preds, 1e-7, 1.0 - 1e-7);
  Var pm = t.add_scalar(t.scale(p, -1.0), 1.0);
  Var term = t.add(t.mul(t.constant(std::move(y)), t.log(p)),
                   t.mul(t.constant(std::move(ym)), t.log(pm)));
  return t.scale(t.mean_all(term), -1.0);
}

}  // namespace hamur
