#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tubelink/embed.hpp"

using namespace tubelink;

namespace {

oracle::Mat as_matrix(const EmbeddingModel& m) {
  oracle::Mat W(m.output_dim(), oracle::Vec(m.input_dim()));
  for (std::size_t r = 0; r < m.output_dim(); ++r)
    for (std::size_t c = 0; c < m.input_dim(); ++c) W[r][c] = m.weight(r, c);
  return W;
}

struct RandomBatch {
  std::vector<oracle::TripletRaw> raw;
  std::vector<TripletFeatures> views;
};

RandomBatch random_batch(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  RandomBatch b;
  for (std::size_t i = 0; i < n; ++i)
    b.raw.push_back({fixture::random_vec(rng, dim), fixture::random_vec(rng, dim),
                     fixture::random_vec(rng, dim)});
  for (const auto& t : b.raw) b.views.push_back({t.a, t.p, t.n});
  return b;
}

}  // namespace

TEST_SUITE("embed") {

TEST_CASE("identity map on a unit input returns that input") {
  const std::size_t d = 3, D = 5;
  std::vector<double> W(d * D, 0.0);
  for (std::size_t i = 0; i < d; ++i) W[i * D + i] = 1.0;
  EmbeddingModel m(D, d, W, std::vector<double>(d, 0.0));
  std::vector<double> x{1, 0, 0, 0, 0};
  auto e = m.embed(x);
  CHECK(e == std::vector<double>{1, 0, 0});
}

TEST_CASE("degenerate projection is a numeric error") {
  EmbeddingModel m(4, 2);
  std::vector<double> x{1, 2, 3, 4};
  CHECK_THROWS_AS(m.embed(x), NumericError);
}

TEST_CASE("input length mismatch is rejected") {
  auto m = EmbeddingModel::initialized(4, 3, 1);
  std::vector<double> x{1, 2, 3};
  CHECK_THROWS_AS(m.embed(x), InvalidArgument);
  CHECK_THROWS_AS(EmbeddingModel(4, 1), InvalidArgument);
  CHECK_THROWS_AS(EmbeddingModel(4, 2, std::vector<double>(7), std::vector<double>(2)), DataError);
}

TEST_CASE("triplet term boundary cases") {
  std::vector<double> a{1, 0}, n{0, 1};
  // |a - n|^2 = 2
  CHECK(triplet_term(a, a, n, 2.0) == 0.0);
  CHECK(triplet_term(a, a, a, 0.2) == doctest::Approx(0.2));
}

TEST_CASE("property: embeddings are unit norm and invariant to positive input scaling") {
  std::mt19937_64 rng(31);
  auto m = EmbeddingModel::initialized(12, 6, 7);
  for (int i = 0; i < 500; ++i) {
    auto x = fixture::random_vec(rng, 12);
    auto e = m.embed(x);
    CHECK(l2_norm(e) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> x2 = x;
    for (double& v : x2) v *= 2.0;
    auto e2 = m.embed(x2);
    for (std::size_t k = 0; k < e.size(); ++k) CHECK(e2[k] == doctest::Approx(e[k]).epsilon(1e-12));
  }
}

TEST_CASE("property: triplet loss non-negative and matches the scalar oracle") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = EmbeddingModel::initialized(6, 4, trial);
    m.bias() = fixture::random_vec(rng, 4, -0.3, 0.3);
    auto batch = random_batch(rng, 1 + trial % 7, 6);
    double margin = 0.05 + 0.5 * (trial % 5) / 5.0;
    double got = triplet_loss(m, batch.views, margin);
    double ref = oracle::triplet_loss(as_matrix(m), m.bias(), batch.raw, margin);
    CHECK(got >= 0.0);
    CHECK(std::abs(got - ref) <= 1e-10);
    // zero exactly when every triplet satisfies the margin
    bool all_ok = true;
    for (double h : oracle::triplet_margins(as_matrix(m), m.bias(), batch.raw, margin)) all_ok &= h <= 0;
    CHECK((got == 0.0) == all_ok);
  }
}

TEST_CASE("gradient matches central differences away from the hinge kink") {
  std::mt19937_64 rng(33);
  const double margin = 0.5;
  int checked = 0;
  for (int trial = 0; checked < 10 && trial < 100; ++trial) {
    auto m = EmbeddingModel::initialized(5, 3, 100 + trial);
    m.bias() = fixture::random_vec(rng, 3, -0.2, 0.2);
    auto batch = random_batch(rng, 4, 5);
    bool near_kink = false;
    for (double h : oracle::triplet_margins(as_matrix(m), m.bias(), batch.raw, margin))
      near_kink |= std::abs(h) < 1e-3;
    if (near_kink) continue;
    ++checked;
    auto g = triplet_loss_gradient(m, batch.views, margin);
    CHECK(g.loss == doctest::Approx(triplet_loss(m, batch.views, margin)).epsilon(1e-12));
    for (std::size_t k = 0; k < m.weights().size(); ++k) {
      auto f = [&](double v) {
        auto mm = m;
        mm.weights()[k] = v;
        return triplet_loss(mm, batch.views, margin);
      };
      double fd = oracle::central_difference(f, m.weights()[k], 1e-6);
      CHECK(oracle::relative_error(g.weights[k], fd) <= 1e-4);
    }
    for (std::size_t k = 0; k < m.bias().size(); ++k) {
      auto f = [&](double v) {
        auto mm = m;
        mm.bias()[k] = v;
        return triplet_loss(mm, batch.views, margin);
      };
      double fd = oracle::central_difference(f, m.bias()[k], 1e-6);
      CHECK(oracle::relative_error(g.bias[k], fd) <= 1e-4);
    }
  }
  CHECK(checked == 10);
}

TEST_CASE("zero epochs returns the initialization") {
  std::mt19937_64 rng(34);
  auto batch = random_batch(rng, 20, 6);
  TripletTrainConfig cfg;
  cfg.epochs = 0;
  cfg.output_dim = 4;
  cfg.seed = 5;
  auto r = train_embedding(batch.views, batch.views, cfg);
  auto init = EmbeddingModel::initialized(6, 4, 5);
  CHECK(r.model.weights() == init.weights());
  CHECK(r.model.bias() == init.bias());
}

TEST_CASE("training separates tracks with per-track latents") {
  std::mt19937_64 rng(35);
  std::normal_distribution<double> noise(0.0, 0.05);
  const std::size_t D = 10, tracks = 12;
  std::vector<std::vector<double>> latent;
  for (std::size_t t = 0; t < tracks; ++t) latent.push_back(fixture::unit_vec(rng, D));
  auto sample = [&](std::size_t t) {
    auto v = latent[t];
    for (double& x : v) x += noise(rng);
    return v;
  };
  auto make = [&](std::size_t n) {
    std::vector<oracle::TripletRaw> out;
    std::uniform_int_distribution<std::size_t> pick(0, tracks - 1);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t a = pick(rng), b = pick(rng);
      while (b == a) b = pick(rng);
      out.push_back({sample(a), sample(a), sample(b)});
    }
    return out;
  };
  auto train_raw = make(2000), val_raw = make(400);
  std::vector<TripletFeatures> train, val;
  for (const auto& t : train_raw) train.push_back({t.a, t.p, t.n});
  for (const auto& t : val_raw) val.push_back({t.a, t.p, t.n});
  TripletTrainConfig cfg;
  cfg.output_dim = 8;
  cfg.epochs = 5;
  cfg.seed = 1;
  auto r = train_embedding(train, val, cfg);
  CHECK(r.best_val_accuracy >= 0.95);
  CHECK(triplet_accuracy(r.model, val) == doctest::Approx(r.best_val_accuracy));
  CHECK(r.log.size() == cfg.epochs + 1);

  SUBCASE("fixed seed is bitwise deterministic") {
    auto again = train_embedding(train, val, cfg);
    CHECK(again.model.weights() == r.model.weights());
    CHECK(again.model.bias() == r.model.bias());
  }
}

TEST_CASE("config validation") {
  TripletTrainConfig cfg;
  cfg.margin = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.learning_rate = -1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

}
