#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "tubelink/core.hpp"
#include "tubelink/embed.hpp"
#include "tubelink/linkscore.hpp"

namespace tubelink {

struct SampleRef {
  std::string video_id;
  int frame_index = 0;
  int track_id = 0;
  BBox bbox;
  std::optional<std::vector<double>> feature;
};

struct Triplet {
  SampleRef anchor;
  SampleRef positive;
  SampleRef negative;
};

/// Raw feature per annotated box, keyed by (video_id, frame_index, track_id).
using FeatureKey = std::tuple<std::string, int, int>;
using FeatureTable = std::map<FeatureKey, std::vector<double>>;

struct TripletSamplingConfig {
  std::size_t n = 50000;  // 8000 for a validation set
  int window = 25;
  double same_video_negative_prob = 0.5;
  std::uint64_t seed = 0;
};

/// Draws `n` triplets from ground-truth tracks. Tracks are chosen uniformly,
/// anchors uniformly within the track among boxes that have a positive
/// candidate, positives uniformly within +-window (excluding the anchor
/// frame). Negatives come from another track of the same video with
/// probability `same_video_negative_prob` (preferring boxes within the window)
/// and from any other track otherwise. Throws DataError when no track has a
/// positive candidate or fewer than two tracks exist.
std::vector<Triplet> sample_triplets(const GroundTruthSet& gt, const FeatureTable& features,
                                     const TripletSamplingConfig& cfg);

/// Frame diagonal per video.
using FrameDiagFn = std::function<double(const std::string& video_id)>;

/// Two link pairs per triplet: (anchor, positive) -> 1, (anchor, negative) -> 0.
/// Geometry uses the anchor's frame diagonal. With an embedding model the
/// appearance distance is appended (5 features), otherwise 4.
std::vector<LinkPair> triplets_to_link_pairs(std::span<const Triplet> triplets,
                                             const FrameDiagFn& frame_diag,
                                             const EmbeddingModel* embedding = nullptr);

/// Views into the triplets' raw features; throws DataError if any is missing.
std::vector<TripletFeatures> triplet_features(std::span<const Triplet> triplets);

}  // namespace tubelink
