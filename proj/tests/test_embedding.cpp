#include <cmath>
#include <vector>

#include "doctest.h"
#include "hamur/binding.hpp"
#include "hamur/embedding.hpp"
#include "hamur/errors.hpp"
#include "hamur/rng.hpp"
#include "oracles.hpp"

using hamur::DatasetSpec;
using hamur::FeatureField;
using hamur::LeafMap;
using hamur::ParamStore;
using hamur::Rng;
using hamur::Tape;
using hamur::Tensor;
using hamur::Var;

namespace {

DatasetSpec spec_ab() {
  DatasetSpec s;
  s.fields = {FeatureField{"a", 3}, FeatureField{"b", 4}};
  s.num_domains = 1;
  return s;
}

}  // namespace

TEST_SUITE("embedding") {

TEST_CASE("tables are registered per field with the right shapes") {
  ParamStore store;
  Rng rng(1);
  build_embedding_params(store, spec_ab(), 5, rng);
  CHECK(store.size() == 2);
  CHECK(hamur::emb_name("a") == store.items()[0].name);
  CHECK(store.at(hamur::emb_name("a")).value.shape() ==
        std::vector<std::size_t>{3, 5});
  CHECK(store.at(hamur::emb_name("b")).value.shape() ==
        std::vector<std::size_t>{4, 5});

  // Init bound is 1/sqrt(e); every value inside, not all zero.
  double bound = 1.0 / std::sqrt(5.0);
  bool any_nonzero = false;
  for (const auto& p : store.items())
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      CHECK(std::abs(p.value[i]) <= bound);
      any_nonzero |= (p.value[i] != 0.0);
    }
  CHECK(any_nonzero);
}

TEST_CASE("lookup concatenates table rows in declared field order") {
  DatasetSpec spec = spec_ab();
  ParamStore store;
  Rng rng(2);
  build_embedding_params(store, spec, 2, rng);
  // Overwrite with recognizable values: table a row r = {r, 10+r},
  // table b row r = {100+r, 200+r}.
  Tensor& ta = store.at(hamur::emb_name("a")).value;
  Tensor& tb = store.at(hamur::emb_name("b")).value;
  for (std::size_t r = 0; r < 3; ++r) {
    ta(r, 0) = static_cast<double>(r);
    ta(r, 1) = 10.0 + static_cast<double>(r);
  }
  for (std::size_t r = 0; r < 4; ++r) {
    tb(r, 0) = 100.0 + static_cast<double>(r);
    tb(r, 1) = 200.0 + static_cast<double>(r);
  }

  Tape t;
  LeafMap lm(t, store, false);
  // Two rows: (a=2, b=0) and (a=1, b=3).
  Var z = embed_batch(t, lm, spec, {2, 0, 1, 3}, 2);
  CHECK(t.val(z).shape() == std::vector<std::size_t>{2, 4});
  CHECK(t.val(z).vec() ==
        std::vector<double>{2, 12, 100, 200, 1, 11, 103, 203});
}

TEST_CASE("lookup equals one-hot times table") {
  DatasetSpec spec = spec_ab();
  ParamStore store;
  Rng rng(3);
  build_embedding_params(store, spec, 4, rng);

  std::vector<std::size_t> ids = {0, 3, 2, 1, 2, 3};  // 3 rows x 2 fields
  Tape t;
  LeafMap lm(t, store, false);
  Var z = embed_batch(t, lm, spec, ids, 3);

  const Tensor& ta = store.at(hamur::emb_name("a")).value;
  const Tensor& tb = store.at(hamur::emb_name("b")).value;
  for (std::size_t r = 0; r < 3; ++r) {
    Tensor oh_a({1, 3}), oh_b({1, 4});
    oh_a(0, ids[r * 2 + 0]) = 1.0;
    oh_b(0, ids[r * 2 + 1]) = 1.0;
    Tensor row_a = oracle::naive_matmul(oh_a, ta);
    Tensor row_b = oracle::naive_matmul(oh_b, tb);
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(t.val(z)(r, c) == row_a(0, c));
      CHECK(t.val(z)(r, 4 + c) == row_b(0, c));
    }
  }
}

TEST_CASE("gradients scatter into looked-up rows, repeats accumulate") {
  DatasetSpec spec = spec_ab();
  ParamStore store;
  Rng rng(4);
  build_embedding_params(store, spec, 2, rng);

  Tape t;
  LeafMap lm(t, store, true);
  // Rows: (a=1, b=2), (a=1, b=0): a-row 1 used twice.
  Var z = embed_batch(t, lm, spec, {1, 2, 1, 0}, 2);
  t.backward(t.sum_all(z));

  const Tensor& ga = t.grad(lm[hamur::emb_name("a")]);
  const Tensor& gb = t.grad(lm[hamur::emb_name("b")]);
  REQUIRE_FALSE(ga.empty());
  CHECK(ga.vec() == std::vector<double>{0, 0, 2, 2, 0, 0});
  CHECK(gb.vec() == std::vector<double>{1, 1, 0, 0, 1, 1, 0, 0});
}

TEST_CASE("embedding gradient matches finite differences") {
  DatasetSpec spec = spec_ab();
  ParamStore store;
  Rng rng(5);
  build_embedding_params(store, spec, 3, rng);
  std::vector<std::size_t> ids = {1, 2, 0, 3, 1, 2};  // 3 rows, repeat a=1

  // Scalar projection of the embedded batch with fixed weights.
  auto loss_value = [&](Tensor* ga, Tensor* gb) {
    Tape t;
    LeafMap lm(t, store, true);
    Var z = embed_batch(t, lm, spec, ids, 3);
    Tensor w(t.val(z).shape());
    Rng prng(0x33);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = prng.uniform(0.5, 1.5);
    Var loss = t.sum_all(t.mul(z, t.constant(std::move(w))));
    double v = t.val(loss)[0];
    if (ga) {
      t.backward(loss);
      *ga = t.grad_or_zeros(lm[hamur::emb_name("a")]);
      *gb = t.grad_or_zeros(lm[hamur::emb_name("b")]);
    }
    return v;
  };

  Tensor ga, gb;
  loss_value(&ga, &gb);
  const double h = 1e-5;
  for (const char* field : {"a", "b"}) {
    Tensor& table = store.at(hamur::emb_name(field)).value;
    const Tensor& g = (*field == 'a') ? ga : gb;
    for (std::size_t i = 0; i < table.size(); ++i) {
      double orig = table[i];
      table[i] = orig + h;
      double up = loss_value(nullptr, nullptr);
      table[i] = orig - h;
      double down = loss_value(nullptr, nullptr);
      table[i] = orig;
      double numeric = (up - down) / (2.0 * h);
      CHECK(std::abs(g[i] - numeric) /
                std::max({1.0, std::abs(g[i]), std::abs(numeric)}) <
            1e-6);
    }
  }
}

TEST_CASE("out-of-range ids are rejected at lookup") {
  DatasetSpec spec = spec_ab();
  ParamStore store;
  Rng rng(6);
  build_embedding_params(store, spec, 2, rng);
  Tape t;
  LeafMap lm(t, store, false);
  CHECK_THROWS_AS(embed_batch(t, lm, spec, {0, 4}, 1), hamur::dim_error);
  CHECK_THROWS_AS(embed_batch(t, lm, spec, {0, 1, 2}, 2), hamur::dim_error);
}

}  // TEST_SUITE
