#include "hamur/embedding.hpp"

#include <cmath>

#include "hamur/errors.hpp"

namespace hamur {

std::string emb_name(const std::string& field) { return "emb/" + field; }

void build_embedding_params(ParamStore& store, const DatasetSpec& spec,
                            std::size_t e, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(e));
  for (const FeatureField& f : spec.fields) {
    Tensor t({f.vocab, e});
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = rng.uniform(-bound, bound);
    store.add(emb_name(f.name), std::move(t));
  }
}

Var embed_batch(Tape& t, const LeafMap& lm, const DatasetSpec& spec,
                const std::vector<std::size_t>& ids, std::size_t rows) {
  std::size_t F = spec.num_fields();
  if (ids.size() != rows * F)
    throw dim_error("embed_batch: " + std::to_string(ids.size()) +
                    " ids for " + std::to_string(rows) + " rows of " +
                    std::to_string(F) + " fields");
  std::vector<Var> parts;
  parts.reserve(F);
  for (std::size_t f = 0; f < F; ++f) {
    std::vector<std::size_t> col(rows);
    for (std::size_t i = 0; i < rows; ++i) col[i] = ids[i * F + f];
    for (std::size_t i = 0; i < rows; ++i)
      if (col[i] >= spec.fields[f].vocab)
        throw dim_error("embed_batch: id " + std::to_string(col[i]) +
                        " out of range for field " + spec.fields[f].name);
    parts.push_back(t.rows(lm[emb_name(spec.fields[f].name)], std::move(col)));
  }
  return parts.size() == 1 ? parts[0] : t.concat_cols(parts);
}

}  // namespace hamur
