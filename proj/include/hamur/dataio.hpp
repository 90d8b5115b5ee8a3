#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hamur {

struct FeatureField {
  std::string name;
  std::size_t vocab = 0;  // valid ids are [0, vocab); 0 is reserved for OOV
};

// Describes the canonical CSV layout: a `domain` column in [1, D], a
// `label` column in {0, 1}, and one integer column per feature field. The
// field named "domain" (if declared) is sourced from the domain column, so
// the routing indicator is also embedded as a feature.
struct DatasetSpec {
  std::vector<FeatureField> fields;
  std::size_t num_domains = 0;

  std::size_t num_fields() const { return fields.size(); }
  int field_index(const std::string& name) const;
};

// Column-compressed instance storage; immutable after load.
class Dataset {
 public:
  DatasetSpec spec;
  std::vector<std::uint32_t> features;  // n * F, row-major
  std::vector<std::uint8_t> labels;     // n
  std::vector<std::uint16_t> domains;   // n, values in [1, D]

  std::size_t size() const { return labels.size(); }
  const std::uint32_t* row(std::size_t i) const {
    return features.data() + i * spec.num_fields();
  }
  Dataset select(const std::vector<std::size_t>& idx) const;
  std::vector<std::size_t> domain_counts() const;  // index 0 = domain 1
};

// Parses the canonical CSV. Ids at or above the field vocabulary (or
// negative) encode to the reserved OOV id 0. Missing columns are config
// errors; non-integer cells are data errors naming the row.
Dataset load_csv(const std::string& path, const DatasetSpec& spec);

struct SplitResult {
  Dataset train, valid, test;
};

// Seeded random partition, stratified by domain: each domain's rows are
// shuffled and cut by the ratios, so every split preserves domain
// proportions to within one instance per domain.
SplitResult split(const Dataset& ds, double r_train, double r_valid,
                  double r_test, std::uint64_t seed);

// One domain's slice of a batch. batch_rows are positions within the
// batch, ascending; ids is (rows x F) flattened.
struct DomainSlice {
  std::vector<std::size_t> batch_rows;
  std::vector<std::size_t> ids;
  std::vector<double> labels;
};

struct Batch {
  std::size_t size = 0;
  std::size_t num_fields = 0;
  std::vector<DomainSlice> domains;  // index 0 = domain 1; may be empty

  std::vector<std::vector<std::size_t>> row_lists() const;
  std::vector<double> flat_labels() const;  // in batch order
};

// Builds a batch from dataset rows in the given order.
Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& idx);

// One shuffled pass over the dataset; (seed, epoch) fully determine the
// order. The final short batch is included.
class BatchStream {
 public:
  BatchStream(const Dataset& ds, std::size_t batch_size, std::uint64_t seed,
              std::uint64_t epoch);
  bool next(Batch& out);
  std::size_t num_batches() const;

 private:
  const Dataset& ds_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace hamur
