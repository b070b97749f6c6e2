#pragma once

// Domain types shared by the whole post-processing pipeline.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tubelink {

// Error categories map onto CLI exit codes (1 usage, 2 data/schema, 3 numeric).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned box anchored at its top-left corner, in pixels.
///
/// The checked constructor rejects non-finite values and non-positive
/// width/height, so every box that reaches the pipeline has positive area.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  BBox() = default;
  BBox(double x, double y, double w, double h);

  Point center() const { return {x + w / 2.0, y + h / 2.0}; }
  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }

  bool operator==(const BBox&) const = default;
};

/// Per-class confidences as produced by the detector; entries in [0,1],
/// not required to sum to one.
using ClassConfidences = std::vector<double>;

/// Unit-norm appearance embedding.
using AppearanceEmbedding = std::vector<double>;

using DetectionId = std::int64_t;
using TubeletId = std::int64_t;

struct Detection {
  std::string video_id;
  int frame_index = 0;
  BBox bbox;
  ClassConfidences confidences;
  std::optional<std::vector<double>> raw_feature;
  std::optional<AppearanceEmbedding> embedding;
  DetectionId detection_id = 0;

  double max_confidence() const;
  int top_class() const;
};

struct TubeletMember {
  int frame_index = 0;
  DetectionId detection_id = 0;

  bool operator==(const TubeletMember&) const = default;
};

struct Tubelet {
  TubeletId tubelet_id = 0;
  std::vector<TubeletMember> members;
  std::optional<ClassConfidences> refined_confidences;
  std::optional<std::vector<BBox>> smoothed_boxes;
};

struct GroundTruthBox {
  std::string video_id;
  int frame_index = 0;
  BBox bbox;
  int class_id = 0;
  int track_id = 0;
};

class ClassCatalog {
 public:
  ClassCatalog() = default;
  explicit ClassCatalog(std::vector<std::string> names);

  /// Catalog with generated names "class_0" ... "class_{n-1}".
  static ClassCatalog anonymous(std::size_t n);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }

 private:
  std::vector<std::string> names_;
};

/// Detections of one video keyed by frame index, each frame ordered by
/// detection id.
using VideoDetections = std::map<int, std::vector<Detection>>;
/// Per-video metadata: frame rate and frame size (for the diagonal that
/// normalizes center distances). frame_count 0 means unknown.
struct VideoInfo {
  double fps = 30.0;
  double width = 640.0;
  double height = 480.0;
  int frame_count = 0;

  double diagonal() const;
};
using VideoInfoMap = std::map<std::string, VideoInfo>;

using DetectionSet = std::map<std::string, VideoDetections>;
using GroundTruthSet = std::map<std::string, std::vector<GroundTruthBox>>;

/// Intersection over union; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b);

/// Euclidean distance between box centers divided by `frame_diag`.
/// Throws InvalidArgument when frame_diag <= 0.
double center_distance(const BBox& a, const BBox& b, double frame_diag);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

}  // namespace tubelink
