#include "tubelink/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

#include "tubelink/linkfeat.hpp"

namespace tubelink {

namespace {

struct TrackIndex {
  const std::string* video_id;
  int track_id;
  std::vector<const GroundTruthBox*> boxes;      // ascending frame
  std::vector<std::size_t> anchor_candidates;  // positions with a positive in range
};

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

SampleRef make_ref(const GroundTruthBox& g, const FeatureTable& features) {
  SampleRef r{g.video_id, g.frame_index, g.track_id, g.bbox, std::nullopt};
  if (!features.empty()) {
    auto it = features.find({g.video_id, g.frame_index, g.track_id});
    if (it == features.end()) {
      throw DataError("no raw feature for video " + g.video_id + " frame " +
                      std::to_string(g.frame_index) + " track " + std::to_string(g.track_id));
    }
    r.feature = it->second;
  }
  return r;
}

}  // namespace

std::vector<Triplet> sample_triplets(const GroundTruthSet& gt, const FeatureTable& features,
                                     const TripletSamplingConfig& cfg) {
  if (cfg.window < 1) throw InvalidArgument("triplet window must be >= 1");
  if (!(cfg.same_video_negative_prob >= 0.0 && cfg.same_video_negative_prob <= 1.0))
    throw InvalidArgument("same-video negative probability must be in [0,1]");

  std::vector<TrackIndex> tracks;
  std::map<std::string, std::vector<std::size_t>> tracks_by_video;
  for (const auto& [video, boxes] : gt) {
    std::map<int, std::vector<const GroundTruthBox*>> grouped;
    for (const auto& b : boxes) grouped[b.track_id].push_back(&b);
    for (auto& [track_id, list] : grouped) {
      std::sort(list.begin(), list.end(), [](const GroundTruthBox* a, const GroundTruthBox* b) {
        return a->frame_index < b->frame_index;
      });
      TrackIndex t{&video, track_id, std::move(list), {}};
      for (std::size_t i = 0; i < t.boxes.size(); ++i) {
        const bool has_positive = std::any_of(t.boxes.begin(), t.boxes.end(), [&](const auto* o) {
          const int gap = std::abs(o->frame_index - t.boxes[i]->frame_index);
          return gap >= 1 && gap <= cfg.window;
        });
        if (has_positive) t.anchor_candidates.push_back(i);
      }
      tracks_by_video[video].push_back(tracks.size());
      tracks.push_back(std::move(t));
    }
  }

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < tracks.size(); ++i)
    if (!tracks[i].anchor_candidates.empty()) eligible.push_back(i);
  if (eligible.empty()) throw DataError("dataset too small: no track has two boxes within the window");
  if (tracks.size() < 2) throw DataError("dataset too small: negatives need at least two tracks");

  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution same_video(cfg.same_video_negative_prob);
  std::vector<Triplet> out;
  out.reserve(cfg.n);
  std::vector<const GroundTruthBox*> candidates;

  for (std::size_t k = 0; k < cfg.n; ++k) {
    const std::size_t ti = eligible[pick(rng, eligible.size())];
    const TrackIndex& track = tracks[ti];
    const GroundTruthBox& anchor = *track.boxes[track.anchor_candidates[pick(rng, track.anchor_candidates.size())]];

    candidates.clear();
    for (const auto* b : track.boxes) {
      const int gap = std::abs(b->frame_index - anchor.frame_index);
      if (gap >= 1 && gap <= cfg.window) candidates.push_back(b);
    }
    const GroundTruthBox& positive = *candidates[pick(rng, candidates.size())];

    const auto& siblings = tracks_by_video.at(*track.video_id);
    const GroundTruthBox* negative = nullptr;
    if (siblings.size() > 1 && same_video(rng)) {
      std::size_t other;
      do {
        other = siblings[pick(rng, siblings.size())];
      } while (other == ti);
      candidates.clear();
      for (const auto* b : tracks[other].boxes)
        if (std::abs(b->frame_index - anchor.frame_index) <= cfg.window) candidates.push_back(b);
      const auto& pool = candidates.empty() ? tracks[other].boxes : candidates;
      negative = pool[pick(rng, pool.size())];
    } else {
      std::size_t other;
      do {
        other = pick(rng, tracks.size());
      } while (other == ti);
      negative = tracks[other].boxes[pick(rng, tracks[other].boxes.size())];
    }

    out.push_back({make_ref(anchor, features), make_ref(positive, features), make_ref(*negative, features)});
  }
  return out;
}

std::vector<LinkPair> triplets_to_link_pairs(std::span<const Triplet> triplets,
                                             const FrameDiagFn& frame_diag,
                                             const EmbeddingModel* embedding) {
  std::vector<LinkPair> pairs;
  pairs.reserve(2 * triplets.size());
  for (const auto& t : triplets) {
    const double diag = frame_diag(t.anchor.video_id);
    std::optional<AppearanceEmbedding> anchor_embedding;
    if (embedding != nullptr) {
      if (!t.anchor.feature) throw DataError("triplet lacks raw features required for appearance");
      anchor_embedding = embedding->embed(*t.anchor.feature);
    }
    auto emit = [&](const SampleRef& other, int label) {
      PairFeatures pf = geometry_features(t.anchor.bbox, other.bbox, diag);
      // boxes of different videos never overlap; distance and ratios stay literal
      if (other.video_id != t.anchor.video_id) pf.iou = 0.0;
      if (anchor_embedding) {
        if (!other.feature) throw DataError("triplet lacks raw features required for appearance");
        const auto e = embedding->embed(*other.feature);
        double s = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) s += ((*anchor_embedding)[i] - e[i]) * ((*anchor_embedding)[i] - e[i]);
        pf.d_app = std::sqrt(s);
      }
      pairs.push_back({pf.scorer_inputs(), label});
    };
    emit(t.positive, 1);
    emit(t.negative, 0);
  }
  return pairs;
}

std::vector<TripletFeatures> triplet_features(std::span<const Triplet> triplets) {
  std::vector<TripletFeatures> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) {
    if (!t.anchor.feature || !t.positive.feature || !t.negative.feature)
      throw DataError("triplet is missing raw features");
    out.push_back({*t.anchor.feature, *t.positive.feature, *t.negative.feature});
  }
  return out;
}

}  // namespace tubelink
