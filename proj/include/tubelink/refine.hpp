#pragma once

#include <span>
#include <vector>

#include "tubelink/core.hpp"

namespace tubelink {

struct SmoothingConfig {
  double sigma = 0.6;  // frame steps; 0 disables smoothing

  void validate() const;
};

/// Sampled Gaussian at integer offsets [-r, r], r = ceil(4 sigma), renormalized
/// to sum to one. Returns {1} for sigma == 0.
std::vector<double> gaussian_kernel(double sigma);

/// Convolution of `series` with a symmetric odd-length kernel, replicate
/// padding at both ends. Output has the input length.
std::vector<double> smooth_series(std::span<const double> series, std::span<const double> kernel);

/// Lookup of the detections referenced by a tubelet.
class DetectionIndex {
 public:
  explicit DetectionIndex(const VideoDetections& frames);
  const Detection& at(const TubeletMember& m) const;

 private:
  std::map<std::pair<int, DetectionId>, const Detection*> by_key_;
};

/// Element-wise mean of the members' confidence vectors.
ClassConfidences rescore(const Tubelet& t, const DetectionIndex& detections);

/// Gaussian-smoothed (x, y, w, h) series of the tubelet, aligned with members.
std::vector<BBox> smooth_coordinates(const Tubelet& t, const DetectionIndex& detections,
                                     const SmoothingConfig& cfg);

/// Fills refined_confidences and smoothed_boxes on every tubelet.
void refine_tubelets(std::vector<Tubelet>& tubelets, const VideoDetections& frames,
                     const SmoothingConfig& cfg);

}  // namespace tubelink
