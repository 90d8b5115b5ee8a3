#include "hamur/tensor.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "hamur/errors.hpp"

#ifdef HAMUR_USE_OPENBLAS
#include <cblas.h>
#endif

namespace hamur {

static std::size_t shape_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_count(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_count(shape_))
    throw dim_error("tensor data size " + std::to_string(data_.size()) +
                    " does not match shape " + shape_str(shape_));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  return Tensor(std::move(shape));
}

Tensor Tensor::ones(std::vector<std::size_t> shape) {
  return full(std::move(shape), 1.0);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), v);
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.size() != 2)
    throw dim_error("rows() on tensor of shape " + shape_str(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2)
    throw dim_error("cols() on tensor of shape " + shape_str(shape_));
  return shape_[1];
}

bool Tensor::bit_equal(const Tensor& o) const {
  if (shape_ != o.shape_) return false;
  return std::memcmp(data_.data(), o.data_.data(),
                     data_.size() * sizeof(double)) == 0;
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string shape_str(const std::vector<std::size_t>& s) {
  std::ostringstream os;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  if (s.empty()) os << "scalar";
  return os.str();
}

#ifdef HAMUR_USE_OPENBLAS

extern "C" void openblas_set_num_threads(int);

namespace {
struct BlasInit {
  BlasInit() { openblas_set_num_threads(1); }  // deterministic, 1-core box
};
const BlasInit blas_init;
}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, double alpha, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double beta, double* c,
          std::size_t ldc) {
  if (m == 0 || n == 0) return;
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(lda), b, static_cast<int>(ldb), beta, c,
              static_cast<int>(ldc));
}

const char* gemm_backend() { return "openblas"; }

#else

// Blocked i-k-j kernel. Accumulation order per output element is fixed by
// the loop structure, so results are reproducible bit-for-bit.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, double alpha, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double beta, double* c,
          std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * ldc;
    if (beta == 0.0)
      std::fill(crow, crow + n, 0.0);
    else if (beta != 1.0)
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
  }
  constexpr std::size_t kb = 64;
  for (std::size_t k0 = 0; k0 < k; k0 += kb) {
    std::size_t k1 = std::min(k0 + kb, k);
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = c + i * ldc;
      for (std::size_t p = k0; p < k1; ++p) {
        double av = trans_a ? a[p * lda + i] : a[i * lda + p];
        if (av == 0.0) continue;
        av *= alpha;
        const double* brow = trans_b ? nullptr : b + p * ldb;
        if (trans_b) {
          for (std::size_t j = 0; j < n; ++j) crow[j] += av * b[j * ldb + p];
        } else {
          for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
      }
    }
  }
}

const char* gemm_backend() { return "builtin"; }

#endif

}  // namespace hamur
