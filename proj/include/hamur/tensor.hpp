#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hamur {

// Dense row-major tensor of doubles. A scalar has shape {1}; a
// default-constructed tensor is "absent" (used for not-yet-allocated
// gradients). All training state in the library is 64-bit.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor ones(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const;  // 2-d only
  std::size_t cols() const;  // 2-d only
  std::size_t dim(std::size_t i) const { return shape_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * shape_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t l) {
    return data_[(i * shape_[1] + j) * shape_[2] + l];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t l) const {
    return data_[(i * shape_[1] + j) * shape_[2] + l];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool bit_equal(const Tensor& o) const;
  bool all_finite() const;

  // Consulted when the tensor is seeded into a Tape as a leaf.
  bool requires_grad = false;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// "2x3"-style shape formatting for error messages.
std::string shape_str(const std::vector<std::size_t>& s);

// C = alpha * op(A) * op(B) + beta * C, row-major. op(A) is m x k,
// op(B) is k x n. Backed by OpenBLAS when built with it, otherwise by a
// built-in blocked kernel; both are deterministic for fixed shapes.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, double alpha, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double beta, double* c,
          std::size_t ldc);

// Name of the active dense kernel ("openblas" or "builtin").
const char* gemm_backend();

}  // namespace hamur
