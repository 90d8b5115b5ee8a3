#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hamur/dataio.hpp"

namespace hamur {

struct PrepareResult {
  std::size_t rows = 0;
  DatasetSpec spec;
  std::vector<std::size_t> domain_counts;
  std::string csv_path, spec_path;
};

// Sidecar path for a canonical CSV: the .csv suffix (if any) replaced by
// .spec.ini.
std::string sidecar_path(const std::string& csv_path);

// Converts a raw MovieLens-1M directory (users.dat, movies.dat,
// ratings.dat) to the canonical CSV plus sidecar. Age groups {1,18},
// {25}, and {35,45,50,56} become domains 1, 2, 3; a rating at or above
// label_threshold becomes label 1. Movie year and the full genre string
// are extracted as two item features. Output is byte-deterministic for a
// given input.
PrepareResult prepare_movielens(const std::string& raw_dir,
                                const std::string& out_csv,
                                int label_threshold = 4);

// Generates the domain-flipped synthetic task: one informative binary
// field predicts the label directly in even domains and inverted in odd
// domains, plus two uninformative fields. Noiseless, so a per-domain
// model can separate it and a shared additive model cannot.
PrepareResult prepare_synthetic(const std::string& out_csv, std::size_t rows,
                                std::size_t domains, std::uint64_t seed);

}  // namespace hamur
