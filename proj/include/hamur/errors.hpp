#pragma once

#include <stdexcept>
#include <string>

namespace hamur {

// Shape/dimension contract violations (matmul mismatch, bad site index, ...).
struct dim_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad experiment configuration; CLI exit code 2.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing/malformed data files or checkpoints; CLI exit code 3.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical divergence during training; CLI exit code 4.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Undefined metric (e.g. AUC on a single-class sample).
struct metric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hamur
