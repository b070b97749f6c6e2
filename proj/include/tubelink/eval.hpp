#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tubelink/core.hpp"

namespace tubelink {

enum class MotionClass { slow, medium, fast };

const char* to_string(MotionClass m);

struct EvalConfig {
  double iou_threshold = 0.5;
  int motion_window = 10;         // +- frames
  double slow_threshold = 0.9;    // mean self-IoU above -> slow
  double fast_threshold = 0.7;    // mean self-IoU below -> fast
  std::optional<double> sampling_period_ms;
  int min_track_len = 2;          // applied in subsampled runs

  void validate() const;
};

struct FrameKey {
  std::string video_id;
  int frame_index = 0;
  auto operator<=>(const FrameKey&) const = default;
};

struct ScoredBox {
  FrameKey key;
  BBox bbox;
  double score = 0.0;
};

struct GtEntry {
  FrameKey key;
  BBox bbox;
  bool counted = true;  // false: matches are ignored (neither TP nor FP)
};

/// All-point interpolated AP. Detections are visited by descending score
/// (input order among ties) and matched to the highest-IoU unmatched GT of the
/// same frame with IoU >= iou_thr (earlier GT wins ties). Returns nullopt when
/// no GT is counted.
std::optional<double> average_precision(std::span<const ScoredBox> detections,
                                        std::span<const GtEntry> ground_truth, double iou_thr);

/// Per-box motion label of one track (boxes in any order). Boxes without a
/// neighbour inside the window, and tracks of length 1, are left unlabeled.
std::vector<std::optional<MotionClass>> classify_motion(std::span<const GroundTruthBox> track,
                                                        const EvalConfig& cfg);

/// Motion labels aligned with each video's ground-truth vector.
std::map<std::string, std::vector<std::optional<MotionClass>>> classify_motion(
    const GroundTruthSet& gt, const EvalConfig& cfg);

/// Frames nearest to k * period_ms, deduplicated and ascending.
std::vector<int> subsample_frames(int frame_count, double fps, double period_ms);

/// Keeps only GT boxes on `frames`, then drops tracks left with fewer than
/// `min_track_len` boxes.
std::vector<GroundTruthBox> subsample_ground_truth(std::span<const GroundTruthBox> gt,
                                                   std::span<const int> frames, int min_track_len);

struct ClassAp {
  std::string name;
  std::optional<double> all, slow, medium, fast;
};

struct EvalCounts {
  std::size_t videos = 0;
  std::size_t gt_boxes = 0;
  std::size_t detections = 0;
};

struct EvalReport {
  double map_all = 0.0;
  std::optional<double> map_slow, map_medium, map_fast;
  std::vector<ClassAp> per_class;
  EvalCounts counts;
  std::optional<double> postprocess_ms_per_frame;
};

/// Per-video processed frame lists; videos not present are evaluated on all
/// frames.
using ProcessedFrames = std::map<std::string, std::vector<int>>;

/// Evaluates detections (class = argmax, score = max confidence) against GT.
/// Motion strata are computed on the full GT before any subsampling.
EvalReport evaluate(const DetectionSet& detections, const GroundTruthSet& gt,
                    const ClassCatalog& catalog, const EvalConfig& cfg,
                    const ProcessedFrames* processed = nullptr);

struct AssociationStats {
  std::size_t pairs = 0;
  std::size_t correct = 0;
  double accuracy() const { return pairs == 0 ? 0.0 : static_cast<double>(correct) / pairs; }
  AssociationStats& operator+=(const AssociationStats& o) {
    pairs += o.pairs;
    correct += o.correct;
    return *this;
  }
};

/// Identity-association accuracy of one video: over GT tracks annotated on
/// two consecutive processed frames with a detection matched (IoU >= match_iou)
/// on both, the fraction whose detections are consecutive in one tubelet.
AssociationStats association_accuracy(const VideoDetections& frames,
                                       std::span<const Tubelet> tubelets,
                                       std::span<const GroundTruthBox> gt, double match_iou = 0.5);

}  // namespace tubelink
