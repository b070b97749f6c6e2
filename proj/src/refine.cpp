#include "tubelink/refine.hpp"

#include <algorithm>
#include <cmath>

namespace tubelink {

namespace {
constexpr double kMinExtent = 1e-6;
}

void SmoothingConfig::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be >= 0");
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const auto radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[i + radius] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

std::vector<double> smooth_series(std::span<const double> series, std::span<const double> kernel) {
  if (kernel.size() % 2 == 0) throw InvalidArgument("kernel length must be odd");
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  if (n <= 1 || (kernel.size() == 1 && kernel[0] == 1.0)) return {series.begin(), series.end()};
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  std::vector<double> out(series.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i + k, 0, n - 1);
      acc += kernel[k + radius] * series[j];
    }
    out[i] = acc;
  }
  return out;
}

DetectionIndex::DetectionIndex(const VideoDetections& frames) {
  for (const auto& [frame, dets] : frames)
    for (const auto& d : dets) by_key_[{frame, d.detection_id}] = &d;
}

const Detection& DetectionIndex::at(const TubeletMember& m) const {
  const auto it = by_key_.find({m.frame_index, m.detection_id});
  if (it == by_key_.end()) {
    throw DataError("tubelet references unknown detection " + std::to_string(m.detection_id) +
                    " at frame " + std::to_string(m.frame_index));
  }
  return *it->second;
}

ClassConfidences rescore(const Tubelet& t, const DetectionIndex& detections) {
  if (t.members.empty()) throw InvalidArgument("cannot rescore an empty tubelet");
  ClassConfidences mean(detections.at(t.members.front()).confidences.size(), 0.0);
  for (const auto& m : t.members) {
    const auto& cc = detections.at(m).confidences;
    if (cc.size() != mean.size()) throw DataError("tubelet members disagree on class count");
    for (std::size_t i = 0; i < cc.size(); ++i) mean[i] += cc[i];
  }
  for (double& v : mean) v /= static_cast<double>(t.members.size());
  return mean;
}

std::vector<BBox> smooth_coordinates(const Tubelet& t, const DetectionIndex& detections,
                                     const SmoothingConfig& cfg) {
  cfg.validate();
  const std::size_t n = t.members.size();
  std::vector<double> xs(n), ys(n), ws(n), hs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const BBox& b = detections.at(t.members[i]).bbox;
    xs[i] = b.x;
    ys[i] = b.y;
    ws[i] = b.w;
    hs[i] = b.h;
  }
  const auto kernel = gaussian_kernel(cfg.sigma);
  xs = smooth_series(xs, kernel);
  ys = smooth_series(ys, kernel);
  ws = smooth_series(ws, kernel);
  hs = smooth_series(hs, kernel);
  std::vector<BBox> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.emplace_back(xs[i], ys[i], std::max(ws[i], kMinExtent), std::max(hs[i], kMinExtent));
  return out;
}

void refine_tubelets(std::vector<Tubelet>& tubelets, const VideoDetections& frames,
                     const SmoothingConfig& cfg) {
  const DetectionIndex index(frames);
  for (auto& t : tubelets) {
    t.refined_confidences = rescore(t, index);
    t.smoothed_boxes = smooth_coordinates(t, index, cfg);
  }
}

}  // namespace tubelink
