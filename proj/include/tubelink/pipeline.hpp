#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tubelink/core.hpp"
#include "tubelink/embed.hpp"
#include "tubelink/eval.hpp"
#include "tubelink/linkscore.hpp"
#include "tubelink/refine.hpp"
#include "tubelink/tubelet.hpp"

namespace tubelink {

struct PostprocessConfig {
  LinkingConfig linking;
  SmoothingConfig smoothing;
  std::optional<double> sampling_period_ms;  // process only the frames nearest k * period
  VideoInfo default_video;                   // for videos missing from the metadata map
  unsigned threads = 1;                      // cross-video parallelism only
};

struct VideoResult {
  VideoDetections frames;  // processed frames, empty ones included
  std::vector<Tubelet> tubelets;
};

struct PostprocessResult {
  std::map<std::string, VideoResult> videos;
  double elapsed_ms = 0.0;  // embedding + linking + refinement, wall clock
  std::size_t frames_processed = 0;

  double ms_per_frame() const {
    return frames_processed == 0 ? 0.0 : elapsed_ms / static_cast<double>(frames_processed);
  }
  std::map<std::string, std::vector<Tubelet>> tubelets() const;
  DetectionSet original_detections() const;
  /// Detections with refined scores and smoothed boxes substituted.
  DetectionSet refined_detections() const;
  ProcessedFrames processed_frames() const;
};

/// Frames a video is processed on: every frame up to the last known one, or
/// the subsampled list when a sampling period is set.
std::vector<int> processed_frame_list(const VideoDetections& frames, const VideoInfo& info,
                                      std::optional<double> sampling_period_ms);

/// Links and refines every video. `linker == nullptr` selects the IoU
/// baseline. With an embedding model, raw features are embedded first.
PostprocessResult postprocess(const DetectionSet& detections, const LinkScorerModel* linker,
                              const EmbeddingModel* embedding, const VideoInfoMap& videos,
                              const PostprocessConfig& cfg);

}  // namespace tubelink
