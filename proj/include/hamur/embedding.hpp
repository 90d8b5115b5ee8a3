#pragma once

#include <string>
#include <vector>

#include "hamur/binding.hpp"
#include "hamur/dataio.hpp"
#include "hamur/rng.hpp"
#include "hamur/tape.hpp"

namespace hamur {

// Embedding table parameter name for a field.
std::string emb_name(const std::string& field);

// Registers one (vocab x e) table per field, including the domain
// indicator field. Rows (the OOV row included) are initialized uniform in
// [-1/sqrt(e), +1/sqrt(e)] and are all trainable.
void build_embedding_params(ParamStore& store, const DatasetSpec& spec,
                            std::size_t e, Rng& rng);

// Looks up every field of every row and concatenates in declared field
// order: output is (rows x F*e), row i = [emb_f0[ids(i,0)], ...,
// emb_fF-1[ids(i,F-1)]]. ids is (rows x F) flattened. Gradients scatter
// back into exactly the looked-up table rows (repeats accumulate).
Var embed_batch(Tape& t, const LeafMap& lm, const DatasetSpec& spec,
                const std::vector<std::size_t>& ids, std::size_t rows);

}  // namespace hamur
