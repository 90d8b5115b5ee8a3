#include "hamur/backbones.hpp"

#include <algorithm>
#include <cmath>

#include "hamur/errors.hpp"

namespace hamur {

const char* backbone_kind_name(BackboneKind k) {
  switch (k) {
    case BackboneKind::mlp: return "mlp";
    case BackboneKind::dcn: return "dcn";
    case BackboneKind::wide_deep: return "wide_deep";
  }
  return "?";
}

BackboneKind parse_backbone_kind(const std::string& name) {
  if (name == "mlp") return BackboneKind::mlp;
  if (name == "dcn") return BackboneKind::dcn;
  if (name == "wide_deep" || name == "wd") return BackboneKind::wide_deep;
  throw config_error("unknown backbone kind '" + name +
                     "' (want mlp, dcn, or wide_deep)");
}

std::size_t BackboneSpec::site_width(std::size_t ordinal) const {
  return widths[sites[ordinal] - 1];
}

void BackboneSpec::validate() const {
  for (std::size_t w : widths)
    if (w == 0) throw config_error("backbone widths must be positive");
  for (std::size_t p : sites) {
    if (p == 0 || p > widths.size())
      throw config_error("adapter site " + std::to_string(p) +
                         " outside hidden layers [1, " +
                         std::to_string(widths.size()) + "]");
  }
  for (std::size_t i = 1; i < sites.size(); ++i)
    if (sites[i] <= sites[i - 1])
      throw config_error("adapter sites must be strictly increasing");
  if (kind == BackboneKind::dcn && cross_layers == 0)
    throw config_error("dcn needs at least one cross layer");
  if (kind != BackboneKind::mlp && widths.empty())
    throw config_error(std::string(backbone_kind_name(kind)) +
                       " needs a non-empty deep tower");
}

namespace {

Tensor uniform_init(std::vector<std::size_t> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = rng.uniform(-bound, bound);
  return t;
}

void add_affine(ParamStore& store, const std::string& name, std::size_t in,
                std::size_t out, Rng& rng) {
  double b = 1.0 / std::sqrt(static_cast<double>(in));
  store.add(name + "/w", uniform_init({in, out}, b, rng));
  store.add(name + "/b", Tensor::zeros({out}));
}

// Hidden stack shared by every kind; applies the hook at its sites.
Var deep_tower(Tape& t, const LeafMap& lm, const std::string& prefix,
               const BackboneSpec& spec, Var x, const AdapterHook& hook) {
  std::size_t next_site = 0;
  for (std::size_t i = 0; i < spec.widths.size(); ++i) {
    std::string name = prefix + "/lin" + std::to_string(i);
    x = t.relu(t.add_rowvec(t.matmul(x, lm[name + "/w"]), lm[name + "/b"]));
    if (next_site < spec.sites.size() && spec.sites[next_site] == i + 1) {
      if (hook) x = hook(t, x, next_site);
      ++next_site;
    }
  }
  return x;
}

Var wide_logit(Tape& t, const LeafMap& lm, const std::string& prefix,
               const DatasetSpec& data_spec, const DomainSlice& slice) {
  std::size_t F = data_spec.num_fields();
  std::size_t rows = slice.batch_rows.size();
  Var acc{};
  for (std::size_t f = 0; f < F; ++f) {
    std::vector<std::size_t> col(rows);
    for (std::size_t i = 0; i < rows; ++i) col[i] = slice.ids[i * F + f];
    Var term = t.rows(lm[prefix + "/wide/" + data_spec.fields[f].name],
                      std::move(col));
    acc = f == 0 ? term : t.add(acc, term);
  }
  return t.add_rowvec(acc, lm[prefix + "/wide/bias"]);
}

}  // namespace

void build_backbone_params(ParamStore& store, const std::string& prefix,
                           const BackboneSpec& spec, std::size_t in_width,
                           const DatasetSpec& data_spec, Rng& rng) {
  spec.validate();
  std::size_t w = in_width;
  for (std::size_t i = 0; i < spec.widths.size(); ++i) {
    add_affine(store, prefix + "/lin" + std::to_string(i), w, spec.widths[i],
               rng);
    w = spec.widths[i];
  }
  switch (spec.kind) {
    case BackboneKind::mlp:
      add_affine(store, prefix + "/out", w, 1, rng);
      break;
    case BackboneKind::dcn: {
      double b = 1.0 / std::sqrt(static_cast<double>(in_width));
      for (std::size_t l = 0; l < spec.cross_layers; ++l) {
        std::string name = prefix + "/cross" + std::to_string(l);
        store.add(name + "/w", uniform_init({in_width, 1}, b, rng));
        store.add(name + "/b", Tensor::zeros({in_width}));
      }
      add_affine(store, prefix + "/out", in_width + w, 1, rng);
      break;
    }
    case BackboneKind::wide_deep:
      // Wide side: one scalar weight per category of every raw field,
      // zero-initialized like a fresh linear model.
      for (const FeatureField& f : data_spec.fields)
        store.add(prefix + "/wide/" + f.name, Tensor::zeros({f.vocab, 1}));
      store.add(prefix + "/wide/bias", Tensor::zeros({1}));
      add_affine(store, prefix + "/out", w, 1, rng);
      break;
  }
}

Var backbone_forward(Tape& t, const LeafMap& lm, const std::string& prefix,
                     const BackboneSpec& spec, Var z,
                     const DomainSlice* slice, const DatasetSpec& data_spec,
                     const AdapterHook& hook) {
  const Tensor& Z = t.val(z);
  if (Z.ndim() != 2)
    throw dim_error("backbone_forward: want (b x in), got " +
                    shape_str(Z.shape()));
  std::size_t in_width = Z.dim(1);
  Var deep = deep_tower(t, lm, prefix, spec, z, hook);
  switch (spec.kind) {
    case BackboneKind::mlp:
      return t.add_rowvec(t.matmul(deep, lm[prefix + "/out/w"]),
                          lm[prefix + "/out/b"]);
    case BackboneKind::dcn: {
      Var x = z;
      for (std::size_t l = 0; l < spec.cross_layers; ++l) {
        std::string name = prefix + "/cross" + std::to_string(l);
        Var s = t.matmul(x, lm[name + "/w"]);  // (b x 1)
        x = t.add(t.add_rowvec(t.row_scale(z, s), lm[name + "/b"]), x);
      }
      (void)in_width;
      Var both = t.concat_cols({x, deep});
      return t.add_rowvec(t.matmul(both, lm[prefix + "/out/w"]),
                          lm[prefix + "/out/b"]);
    }
    case BackboneKind::wide_deep: {
      if (!slice)
        throw dim_error("backbone_forward: wide_deep needs raw ids");
      Var deep_logit = t.add_rowvec(t.matmul(deep, lm[prefix + "/out/w"]),
                                    lm[prefix + "/out/b"]);
      return t.add(wide_logit(t, lm, prefix, data_spec, *slice), deep_logit);
    }
  }
  throw dim_error("backbone_forward: unknown kind");
}

}  // namespace hamur
