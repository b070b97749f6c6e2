#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tubelink/io.hpp"
#include "tubelink/linkscore.hpp"

using namespace tubelink;

namespace {

PairFeatures features(double iou, double dc, double rw, double rh, std::optional<double> app,
                      double fsem) {
  PairFeatures pf;
  pf.iou = iou;
  pf.d_centers = dc;
  pf.ratio_w = rw;
  pf.ratio_h = rh;
  pf.d_app = app;
  pf.f_sem = fsem;
  return pf;
}

// Positives: high iou, close centers, low d_app. Separable with a margin.
std::vector<LinkPair> separable_pairs(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<LinkPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    int label = static_cast<int>(i % 2);
    double shift = label ? 0.6 : 0.0;
    out.push_back({{0.3 * u(rng) + shift, 0.5 - 0.3 * u(rng) - shift * 0.5, u(rng), u(rng),
                    1.5 - shift * 2 + 0.3 * u(rng)},
                   label});
  }
  return out;
}

}  // namespace

TEST_SUITE("linkscore") {

TEST_CASE("zero model gives one half") {
  auto m = LinkScorerModel::zero(true);
  CHECK(scorer_probability(m, features(0.3, 0.1, 0.5, 0.9, 0.7, 1.0)) == 0.5);
  CHECK(scorer_probability(m, features(1, 0, 1, 1, 0, 0.2)) == 0.5);
}

TEST_CASE("large bias saturates toward one") {
  auto m = LinkScorerModel::zero(false);
  m.bias = 10.0;
  CHECK(scorer_probability(m, features(0.3, 0.1, 0.5, 0.9, std::nullopt, 1.0)) > 0.9999);
}

TEST_CASE("link score is the gated probability") {
  auto m = LinkScorerModel::zero(false);
  auto pf = features(0.3, 0.1, 0.5, 0.9, std::nullopt, 0.0);
  m.bias = 3.0;
  CHECK(link_score(m, pf) == 0.0);
  pf.f_sem = 1.0;
  CHECK(link_score(m, pf) == scorer_probability(m, pf));
  // X = 0.8 at bias logit(0.8)
  m.bias = std::log(0.8 / 0.2);
  pf.f_sem = 0.5;
  CHECK(link_score(m, pf) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("appearance mismatch is a model input error") {
  CHECK_THROWS_AS(scorer_probability(LinkScorerModel::zero(true), features(1, 0, 1, 1, std::nullopt, 1)),
                  DataError);
  CHECK_THROWS_AS(scorer_probability(LinkScorerModel::zero(false), features(1, 0, 1, 1, 0.1, 1)),
                  DataError);
}

TEST_CASE("model validation") {
  auto m = LinkScorerModel::zero(true);
  m.validate();
  m.feature_stds[2] = 0.0;
  CHECK_THROWS_AS(m.validate(), DataError);
  m = LinkScorerModel::zero(true);
  m.weights.pop_back();
  CHECK_THROWS_AS(m.validate(), DataError);
  m = LinkScorerModel::zero(false);
  m.bias = NAN;
  CHECK_THROWS_AS(m.validate(), DataError);
}

TEST_CASE("property: 0 <= LS <= f_sem, exact zero at f_sem = 0") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    LinkScorerModel m = LinkScorerModel::zero(true);
    m.weights = fixture::random_vec(rng, 5, -5, 5);
    m.bias = 4 * (u(rng) - 0.5);
    m.feature_means = fixture::random_vec(rng, 5, 0, 1);
    m.feature_stds = fixture::random_vec(rng, 5, 0.1, 1);
    auto pf = features(u(rng), u(rng), u(rng), u(rng), 2 * u(rng), u(rng));
    double ls = link_score(m, pf);
    CHECK(ls >= 0.0);
    CHECK(ls <= pf.f_sem);
    pf.f_sem = 0.0;
    CHECK(link_score(m, pf) == 0.0);
  }
}

TEST_CASE("property: scorer probability matches a scalar reimplementation") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    LinkScorerModel m = LinkScorerModel::zero(true);
    m.weights = fixture::random_vec(rng, 5, -3, 3);
    m.bias = u(rng) - 0.5;
    m.feature_means = fixture::random_vec(rng, 5, 0, 1);
    m.feature_stds = fixture::random_vec(rng, 5, 0.1, 1);
    auto x = fixture::random_vec(rng, 5, 0, 1);
    double z = m.bias;
    for (int k = 0; k < 5; ++k) z += m.weights[k] * (x[k] - m.feature_means[k]) / m.feature_stds[k];
    CHECK(scorer_probability(m, x) == doctest::Approx(1 / (1 + std::exp(-z))).epsilon(1e-12));
  }
}

TEST_CASE("log-loss gradient matches oracle and central differences") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 3 + trial, dim = trial % 2 ? 5 : 4;
    oracle::Mat X;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      X.push_back(fixture::random_vec(rng, dim, -2, 2));
      y.push_back(static_cast<int>(rng() % 2));
    }
    auto w = fixture::random_vec(rng, dim, -1, 1);
    double b = fixture::random_vec(rng, 1, -1, 1)[0];
    double l2 = 1e-3 * trial;
    auto g = log_loss_gradient(w, b, X, y, l2);
    auto ref = oracle::log_loss_gradient(w, b, X, y, l2);
    CHECK(g.loss == doctest::Approx(ref.loss).epsilon(1e-12));
    CHECK(g.grad_bias == doctest::Approx(ref.gb).epsilon(1e-12));
    for (std::size_t j = 0; j < dim; ++j) {
      CHECK(g.grad_weights[j] == doctest::Approx(ref.gw[j]).epsilon(1e-12));
      auto f = [&](double v) {
        auto ww = w;
        ww[j] = v;
        return oracle::log_loss(ww, b, X, y, l2);
      };
      CHECK(oracle::relative_error(g.grad_weights[j], oracle::central_difference(f, w[j], 1e-5)) <= 1e-6);
    }
    auto fb = [&](double v) { return oracle::log_loss(w, v, X, y, l2); };
    CHECK(oracle::relative_error(g.grad_bias, oracle::central_difference(fb, b, 1e-5)) <= 1e-6);
  }
}

TEST_CASE("roc auc") {
  std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  std::vector<int> l{0, 0, 1, 1};
  CHECK(roc_auc(s, l) == doctest::Approx(0.75));
  std::vector<double> tied{0.5, 0.5};
  std::vector<int> tl{0, 1};
  CHECK(roc_auc(tied, tl) == doctest::Approx(0.5));
  std::vector<int> one{1, 1};
  CHECK_THROWS_AS(roc_auc(tied, one), DataError);
}

TEST_CASE("training on separable pairs") {
  std::mt19937_64 rng(44);
  auto train = separable_pairs(rng, 2000);
  auto val = separable_pairs(rng, 500);
  LinkScorerTrainConfig cfg;
  auto r = train_link_scorer(train, val, cfg);
  CHECK(r.validation_auc >= 0.99);
  CHECK(r.log.back().train_loss < r.log.front().train_loss);
  CHECK(r.model.uses_appearance);
  r.model.validate();

  SUBCASE("saved and reloaded model scores identically") {
    fixture::TempDir dir("linkscore");
    io::save_model(dir / "m.json", r.model);
    auto back = io::load_link_scorer(dir / "m.json");
    for (const auto& p : train)
      CHECK(std::abs(scorer_probability(back, p.features) - scorer_probability(r.model, p.features)) <= 1e-9);
  }
}

TEST_CASE("loss is non-increasing per epoch at a small learning rate") {
  std::mt19937_64 rng(45);
  auto train = separable_pairs(rng, 400);
  LinkScorerTrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs = 100;
  auto r = train_link_scorer(train, train, cfg);
  for (std::size_t i = 1; i < r.log.size(); ++i) CHECK(r.log[i].train_loss <= r.log[i - 1].train_loss + 1e-15);
}

TEST_CASE("zero epochs leaves w = 0") {
  std::mt19937_64 rng(46);
  auto train = separable_pairs(rng, 100);
  LinkScorerTrainConfig cfg;
  cfg.epochs = 0;
  auto r = train_link_scorer(train, {}, cfg);
  for (double w : r.model.weights) CHECK(w == 0.0);
  CHECK(r.model.bias == 0.0);
  for (const auto& p : train) CHECK(scorer_probability(r.model, p.features) == 0.5);
}

TEST_CASE("single-label dataset is rejected") {
  std::vector<LinkPair> pairs{{{1, 0, 1, 1}, 1}, {{0.9, 0, 1, 1}, 1}};
  CHECK_THROWS_AS(train_link_scorer(pairs, {}, {}), DataError);
}

TEST_CASE("holdout split is seeded") {
  std::mt19937_64 rng(47);
  auto pairs = separable_pairs(rng, 300);
  LinkScorerTrainConfig cfg;
  cfg.epochs = 20;
  auto a = train_link_scorer(pairs, {}, cfg);
  auto b = train_link_scorer(pairs, {}, cfg);
  CHECK(a.validation_size == 60);
  CHECK(a.train_size == 240);
  CHECK(a.model.weights == b.model.weights);
}

}
