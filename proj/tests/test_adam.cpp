#include <cmath>

#include "doctest.h"
#include "hamur/adam.hpp"
#include "hamur/errors.hpp"
#include "hamur/tensor.hpp"

using hamur::AdamConfig;
using hamur::AdamState;
using hamur::ParamStore;
using hamur::Tensor;

TEST_SUITE("adam") {

TEST_CASE("first step moves by ~lr regardless of gradient scale") {
  AdamConfig cfg;
  cfg.lr = 0.1;
  // After bias correction, mhat = g and vhat = g^2, so the step is
  // lr * g / (|g| + eps): the sign of g at magnitude ~lr.
  for (double g : {1.0, 0.01, -250.0}) {
    CAPTURE(g);
    Tensor p = Tensor::full({1}, 5.0);
    Tensor grad = Tensor::full({1}, g);
    AdamState st;
    adam_step(p, grad, st, cfg);
    double expect = 5.0 - 0.1 * (g > 0 ? 1.0 : -1.0);
    CHECK(p[0] == doctest::Approx(expect).epsilon(1e-6));
    CHECK(st.t == 1);
  }
}

TEST_CASE("hand-computed two-step trajectory") {
  AdamConfig cfg;  // defaults: lr 1e-3, beta1 0.9, beta2 0.999, eps 1e-8
  Tensor p = Tensor::full({1}, 0.0);
  AdamState st;

  double m = 0.0, v = 0.0, x = 0.0;
  for (int step = 1; step <= 2; ++step) {
    double g = (step == 1) ? 2.0 : -1.0;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    double mhat = m / (1.0 - std::pow(0.9, step));
    double vhat = v / (1.0 - std::pow(0.999, step));
    x -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    Tensor grad = Tensor::full({1}, g);
    adam_step(p, grad, st, cfg);
    CHECK(p[0] == doctest::Approx(x).epsilon(1e-15));
  }
  CHECK(st.t == 2);
}

TEST_CASE("moment buffers are allocated lazily and track shape") {
  AdamState st;
  CHECK(st.m.empty());
  CHECK(st.v.empty());
  Tensor p = Tensor::zeros({2, 3});
  Tensor g = Tensor::ones({2, 3});
  adam_step(p, g, st, AdamConfig{});
  CHECK(st.m.shape() == p.shape());
  CHECK(st.v.shape() == p.shape());
}

TEST_CASE("gradient shape mismatch is rejected") {
  Tensor p = Tensor::zeros({2});
  Tensor g = Tensor::zeros({3});
  AdamState st;
  CHECK_THROWS_AS(adam_step(p, g, st, AdamConfig{}), hamur::dim_error);
}

TEST_CASE("skipped steps do not advance a parameter's bias correction") {
  AdamConfig cfg;
  cfg.lr = 0.5;
  Tensor a = Tensor::zeros({1}), b = Tensor::zeros({1});
  AdamState sa, sb;
  Tensor g = Tensor::full({1}, 1.0);

  // b misses the first round (as when its domain is absent from a batch).
  adam_step(a, g, sa, cfg);
  adam_step(a, g, sa, cfg);
  adam_step(b, g, sb, cfg);
  CHECK(sa.t == 2);
  CHECK(sb.t == 1);
  // b's first update must look like any first update, not a stale t=2 one.
  CHECK(b[0] == doctest::Approx(-0.5).epsilon(1e-6));
}

TEST_CASE("param store keeps insertion order and rejects duplicates") {
  ParamStore store;
  store.add("w", Tensor::zeros({2, 2}));
  store.add("b", Tensor::zeros({2}));
  CHECK_THROWS_AS(store.add("w", Tensor::zeros({1})), hamur::dim_error);

  CHECK(store.size() == 2);
  CHECK(store.total_values() == 6);
  CHECK(store.index_of("w") == 0);
  CHECK(store.index_of("b") == 1);
  CHECK(store.index_of("nope") == -1);
  CHECK(store.find("nope") == nullptr);
  CHECK(&store.at("b") == &store.items()[1]);
  CHECK_THROWS_AS(store.at("nope"), hamur::dim_error);
}

TEST_CASE("references returned by add stay valid as the store grows") {
  ParamStore store;
  hamur::Parameter& first = store.add("p0", Tensor::full({1}, 7.0));
  for (int i = 1; i < 100; ++i)
    store.add("p" + std::to_string(i), Tensor::zeros({4}));
  CHECK(first.value[0] == 7.0);
  CHECK(&first == &store.at("p0"));
}

}  // TEST_SUITE
