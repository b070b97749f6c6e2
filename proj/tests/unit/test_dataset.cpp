#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "fixtures.hpp"
#include "tubelink/dataset.hpp"
#include "tubelink/synth.hpp"

using namespace tubelink;

namespace {

SynthScene small_scene(std::uint64_t seed) {
  SynthConfig c;
  c.n_videos = 3;
  c.frames_per_video = 40;
  c.seed = seed;
  return generate(c);
}

double diag640(const std::string&) { return VideoInfo{}.diagonal(); }

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("property: triplet invariants over random seeds") {
  auto scene = small_scene(1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TripletSamplingConfig cfg;
    cfg.n = 300;
    cfg.window = 1 + static_cast<int>(seed % 25);
    cfg.seed = seed;
    auto ts = sample_triplets(scene.ground_truth, scene.features, cfg);
    REQUIRE(ts.size() == cfg.n);
    for (const auto& t : ts) {
      CHECK(t.anchor.video_id == t.positive.video_id);
      CHECK(t.anchor.track_id == t.positive.track_id);
      CHECK((t.negative.video_id != t.anchor.video_id || t.negative.track_id != t.anchor.track_id));
      int gap = std::abs(t.anchor.frame_index - t.positive.frame_index);
      CHECK(gap >= 1);
      CHECK(gap <= cfg.window);
      CHECK(t.anchor.feature);
    }
  }
}

TEST_CASE("sampling is seed-deterministic") {
  auto scene = small_scene(2);
  TripletSamplingConfig cfg;
  cfg.n = 200;
  cfg.seed = 9;
  auto a = sample_triplets(scene.ground_truth, scene.features, cfg);
  auto b = sample_triplets(scene.ground_truth, scene.features, cfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].anchor.frame_index == b[i].anchor.frame_index);
    CHECK(a[i].positive.frame_index == b[i].positive.frame_index);
    CHECK(a[i].negative.video_id == b[i].negative.video_id);
    CHECK(a[i].negative.track_id == b[i].negative.track_id);
    CHECK(a[i].negative.frame_index == b[i].negative.frame_index);
  }
}

TEST_CASE("same-video negative share follows the configured probability") {
  auto scene = small_scene(3);
  TripletSamplingConfig cfg;
  cfg.n = 4000;
  cfg.seed = 1;
  auto ts = sample_triplets(scene.ground_truth, scene.features, cfg);
  std::size_t same = 0;
  for (const auto& t : ts) same += t.negative.video_id == t.anchor.video_id;
  // other-video draws may also land in the same video
  CHECK(static_cast<double>(same) / ts.size() >= 0.5);
  cfg.same_video_negative_prob = 1.0;
  for (const auto& t : sample_triplets(scene.ground_truth, scene.features, cfg))
    CHECK(t.negative.video_id == t.anchor.video_id);
}

TEST_CASE("too small datasets are rejected") {
  GroundTruthSet single;
  single["v"].push_back({"v", 0, {0, 0, 5, 5}, 0, 1});
  CHECK_THROWS_AS(sample_triplets(single, {}, {}), DataError);
  GroundTruthSet one_track;
  one_track["v"].push_back({"v", 0, {0, 0, 5, 5}, 0, 1});
  one_track["v"].push_back({"v", 1, {0, 0, 5, 5}, 0, 1});
  CHECK_THROWS_AS(sample_triplets(one_track, {}, {}), DataError);
  TripletSamplingConfig bad;
  bad.window = 0;
  CHECK_THROWS_AS(sample_triplets(one_track, {}, bad), InvalidArgument);
}

TEST_CASE("link pairs: two per triplet, balanced labels") {
  auto scene = small_scene(4);
  TripletSamplingConfig cfg;
  cfg.n = 500;
  auto ts = sample_triplets(scene.ground_truth, scene.features, cfg);
  auto pairs = triplets_to_link_pairs(ts, diag640);
  REQUIRE(pairs.size() == 1000);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].label == static_cast<int>(i % 2 == 0));
    CHECK(pairs[i].features.size() == 4);
    pos += pairs[i].label;
  }
  CHECK(pos == 500);

  auto model = EmbeddingModel::initialized(32, 8, 1);
  auto with_app = triplets_to_link_pairs(ts, diag640, &model);
  for (const auto& p : with_app) {
    REQUIRE(p.features.size() == 5);
    CHECK(p.features[4] >= 0.0);
    CHECK(p.features[4] <= 2.0 + 1e-12);
  }
}

TEST_CASE("identical anchor and positive boxes give iou 1 and zero distance") {
  Triplet t;
  t.anchor = {"a", 0, 1, {10, 10, 20, 20}, std::nullopt};
  t.positive = {"a", 1, 1, {10, 10, 20, 20}, std::nullopt};
  t.negative = {"b", 0, 2, {10, 10, 20, 20}, std::nullopt};
  auto pairs = triplets_to_link_pairs(std::span<const Triplet>(&t, 1), diag640);
  CHECK(pairs[0].features[0] == doctest::Approx(1.0));
  CHECK(pairs[0].features[1] == 0.0);
  // other video: disjoint coordinate spaces
  CHECK(pairs[1].features[0] == 0.0);
  CHECK(pairs[1].features[1] == 0.0);
}

TEST_CASE("triplet features require raw features") {
  Triplet t;
  t.anchor = {"a", 0, 1, {10, 10, 20, 20}, std::vector<double>{1}};
  t.positive = t.anchor;
  t.negative = {"a", 0, 2, {10, 10, 20, 20}, std::nullopt};
  CHECK_THROWS_AS(triplet_features(std::span<const Triplet>(&t, 1)), DataError);
}

}
