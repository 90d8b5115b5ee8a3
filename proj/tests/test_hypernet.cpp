#include <cmath>
#include <vector>

#include "doctest.h"
#include "hamur/binding.hpp"
#include "hamur/hypernet.hpp"
#include "hamur/rng.hpp"
#include "oracles.hpp"

using hamur::FactorVars;
using hamur::LeafMap;
using hamur::ParamStore;
using hamur::Rng;
using hamur::Tape;
using hamur::Tensor;
using hamur::Var;

namespace {

ParamStore hyper_store(std::size_t in, std::size_t m, std::size_t k,
                       std::uint64_t seed) {
  ParamStore store;
  Rng rng(seed);
  hamur::build_hyper_params(store, in, m, k, rng);
  return store;
}

}  // namespace

TEST_SUITE("hypernet") {

TEST_CASE("parameter shapes and init bounds") {
  ParamStore store = hyper_store(6, 4, 3, 1);
  CHECK(store.at("hyper/w1").value.shape() == std::vector<std::size_t>{6, 4});
  CHECK(store.at("hyper/b1").value.shape() == std::vector<std::size_t>{4});
  CHECK(store.at("hyper/w2").value.shape() == std::vector<std::size_t>{4, 9});
  CHECK(store.at("hyper/b2").value.shape() == std::vector<std::size_t>{9});

  double bound_w1 = 1.0 / std::sqrt(6.0);
  const Tensor& w1 = store.at("hyper/w1").value;
  for (std::size_t i = 0; i < w1.size(); ++i)
    CHECK(std::abs(w1[i]) <= bound_w1);
  double bound_w2 = 1.0 / std::sqrt(4.0);
  const Tensor& w2 = store.at("hyper/w2").value;
  for (std::size_t i = 0; i < w2.size(); ++i)
    CHECK(std::abs(w2[i]) <= bound_w2);
}

TEST_CASE("representation reshapes the output head row-major") {
  const std::size_t k = 2;
  ParamStore store = hyper_store(3, 4, k, 2);
  // Zero the first layer so hidden = relu(b1) and set b1 = 0: the head
  // output is exactly b2, laid out row-major per instance.
  for (auto name : {"hyper/w1", "hyper/b1", "hyper/w2"}) {
    Tensor& v = store.at(name).value;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.0;
  }
  Tensor& b2 = store.at("hyper/b2").value;
  for (std::size_t i = 0; i < 4; ++i) b2[i] = static_cast<double>(i + 1);

  Tape t;
  LeafMap lm(t, store, false);
  Tensor z({2, 3}, {0.3, -0.7, 2.0, 0.0, 0.1, -0.5});
  Var I = hamur::represent(t, lm, t.constant(std::move(z)), k);
  CHECK(t.val(I).shape() == std::vector<std::size_t>{2, 2, 2});
  for (std::size_t b = 0; b < 2; ++b) {
    CHECK(t.val(I)(b, 0, 0) == 1.0);
    CHECK(t.val(I)(b, 0, 1) == 2.0);
    CHECK(t.val(I)(b, 1, 0) == 3.0);
    CHECK(t.val(I)(b, 1, 1) == 4.0);
  }
}

TEST_CASE("representation matches a by-hand forward pass") {
  const std::size_t in = 3, m = 2, k = 2;
  ParamStore store = hyper_store(in, m, k, 3);
  Tape t;
  LeafMap lm(t, store, false);
  Rng rng(12);
  Tensor z = oracle::rand_tensor({2, in}, rng);
  Var I = hamur::represent(t, lm, t.constant(z), k);

  const Tensor& w1 = store.at("hyper/w1").value;
  const Tensor& b1 = store.at("hyper/b1").value;
  const Tensor& w2 = store.at("hyper/w2").value;
  const Tensor& b2 = store.at("hyper/b2").value;
  for (std::size_t b = 0; b < 2; ++b) {
    std::vector<double> hidden(m);
    for (std::size_t j = 0; j < m; ++j) {
      double acc = b1[j];
      for (std::size_t i = 0; i < in; ++i) acc += z(b, i) * w1(i, j);
      hidden[j] = std::max(0.0, acc);
    }
    for (std::size_t o = 0; o < k * k; ++o) {
      double acc = b2[o];
      for (std::size_t j = 0; j < m; ++j) acc += hidden[j] * w2(j, o);
      CHECK(t.val(I)(b, o / k, o % k) ==
            doctest::Approx(acc).epsilon(1e-13));
    }
  }
}

TEST_CASE("instances with equal embeddings get equal representations") {
  ParamStore store = hyper_store(4, 3, 3, 4);
  Tape t;
  LeafMap lm(t, store, false);
  Tensor z({3, 4});
  Rng rng(5);
  for (std::size_t c = 0; c < 4; ++c) {
    double v = rng.uniform(-1.0, 1.0);
    z(0, c) = v;
    z(2, c) = v;  // row 2 duplicates row 0
    z(1, c) = rng.uniform(-1.0, 1.0);
  }
  Var I = hamur::represent(t, lm, t.constant(std::move(z)), 3);
  const Tensor& val = t.val(I);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(val(0, j, c) == val(2, j, c));  // no per-row branch
    }
}

TEST_CASE("generated weights equal the naive per-instance product") {
  const std::size_t k = 3, s = 2, h = 4, B = 3;
  ParamStore store;
  Rng rng(6);
  hamur::build_factor_params(store, "factors/d1/site0", k, s, h, rng);

  Tape t;
  LeafMap lm(t, store, false);
  FactorVars f = hamur::factor_vars(lm, "factors/d1/site0");
  Tensor I = oracle::rand_tensor({B, k, k}, rng);
  auto [U, V] = hamur::generate_adapter_weights(t, t.constant(I), f);
  CHECK(t.val(U).shape() == std::vector<std::size_t>{B, s, h});
  CHECK(t.val(V).shape() == std::vector<std::size_t>{B, h, s});

  const Tensor& w_ul = store.at("factors/d1/site0/w_ul").value;  // s x k
  const Tensor& w_ur = store.at("factors/d1/site0/w_ur").value;  // k x h
  const Tensor& w_vl = store.at("factors/d1/site0/w_vl").value;  // h x k
  const Tensor& w_vr = store.at("factors/d1/site0/w_vr").value;  // k x s
  for (std::size_t b = 0; b < B; ++b) {
    Tensor Ib({k, k}, std::vector<double>(I.data() + b * k * k,
                                          I.data() + (b + 1) * k * k));
    Tensor u_want = oracle::naive_matmul(oracle::naive_matmul(w_ul, Ib), w_ur);
    Tensor v_want = oracle::naive_matmul(oracle::naive_matmul(w_vl, Ib), w_vr);
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < h; ++j)
        CHECK(std::abs(t.val(U)(b, i, j) - u_want(i, j)) <= 1e-12);
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < s; ++j)
        CHECK(std::abs(t.val(V)(b, i, j) - v_want(i, j)) <= 1e-12);
  }
}

TEST_CASE("weight generation is linear in the representation") {
  const std::size_t k = 3, s = 2, h = 4;
  ParamStore store;
  Rng rng(7);
  hamur::build_factor_params(store, "f", k, s, h, rng);

  Tape t;
  LeafMap lm(t, store, false);
  FactorVars f = hamur::factor_vars(lm, "f");
  Tensor I1 = oracle::rand_tensor({2, k, k}, rng);
  Tensor I2 = oracle::rand_tensor({2, k, k}, rng);
  Tensor mix({2, k, k});
  const double a = 0.7, b = -1.3;
  for (std::size_t i = 0; i < mix.size(); ++i)
    mix[i] = a * I1[i] + b * I2[i];

  auto [u1, v1] = hamur::generate_adapter_weights(t, t.constant(I1), f);
  auto [u2, v2] = hamur::generate_adapter_weights(t, t.constant(I2), f);
  auto [um, vm] = hamur::generate_adapter_weights(t, t.constant(mix), f);
  (void)v1;
  (void)v2;
  for (std::size_t i = 0; i < t.val(um).size(); ++i)
    CHECK(t.val(um)[i] ==
          doctest::Approx(a * t.val(u1)[i] + b * t.val(u2)[i]).epsilon(1e-11));
  for (std::size_t i = 0; i < t.val(vm).size(); ++i)
    CHECK(t.val(vm)[i] ==
          doctest::Approx(a * t.val(v1)[i] + b * t.val(v2)[i]).epsilon(1e-11));

  // Zero representation annihilates both factors.
  auto [u0, v0] = hamur::generate_adapter_weights(
      t, t.constant(Tensor::zeros({2, k, k})), f);
  for (std::size_t i = 0; i < t.val(u0).size(); ++i)
    CHECK(t.val(u0)[i] == 0.0);
  for (std::size_t i = 0; i < t.val(v0).size(); ++i)
    CHECK(t.val(v0)[i] == 0.0);
}

TEST_CASE("identity factors pass the representation through") {
  const std::size_t k = 3;
  ParamStore store;
  Rng rng(8);
  hamur::build_factor_params(store, "f", k, k, k, rng);
  for (auto name : {"f/w_ul", "f/w_ur", "f/w_vl", "f/w_vr"}) {
    Tensor& w = store.at(name).value;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) w(i, j) = (i == j) ? 1.0 : 0.0;
  }
  Tape t;
  LeafMap lm(t, store, false);
  FactorVars f = hamur::factor_vars(lm, "f");
  Tensor I = oracle::rand_tensor({2, k, k}, rng);
  auto [U, V] = hamur::generate_adapter_weights(t, t.constant(I), f);
  for (std::size_t i = 0; i < I.size(); ++i) {
    CHECK(t.val(U)[i] == doctest::Approx(I[i]).epsilon(1e-13));
    CHECK(t.val(V)[i] == doctest::Approx(I[i]).epsilon(1e-13));
  }
}

TEST_CASE("per-instance generation stays low-rank sized") {
  // The representation (k^2 values feeding the factors) is much smaller
  // than the direct per-instance weight pair (2*s*h values) for the
  // shipped experiment shapes.
  struct Shape { std::size_t k, s, h; };
  for (Shape sh : {Shape{35, 32, 256}, Shape{30, 32, 256}, Shape{45, 32, 256}})
    CHECK(sh.k * sh.k < 2 * sh.s * sh.h);
}

TEST_CASE("finite differences through represent and generation") {
  const std::size_t in = 4, m = 3, k = 2, s = 2, h = 3, B = 3;
  ParamStore store;
  Rng rng(9);
  hamur::build_hyper_params(store, in, m, k, rng);
  hamur::build_factor_params(store, "f", k, s, h, rng);

  // FD over the instance embedding through the real code path; gradients
  // with respect to the parameters are covered by the full-model check in
  // the acceptance gate.
  std::vector<Tensor> ins = {oracle::rand_tensor({B, in}, rng)};
  auto build = [&](Tape& t, const std::vector<Var>& v) {
    LeafMap lm(t, store, false);
    Var I = hamur::represent(t, lm, v[0], k);
    FactorVars f = hamur::factor_vars(lm, "f");
    auto [U, V] = hamur::generate_adapter_weights(t, I, f);
    return t.concat_cols({t.reshape(U, {B, s * h}), t.reshape(V, {B, h * s})});
  };
  CHECK(oracle::fd_max_rel_err(ins, build) < 1e-6);
}

}  // TEST_SUITE
