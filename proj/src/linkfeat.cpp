#include "tubelink/linkfeat.hpp"

#include <algorithm>
#include <cmath>

namespace tubelink {

namespace {

double min_max_ratio(double a, double b) { return std::min(a, b) / std::max(a, b); }

double euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("embedding length mismatch between detections");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<double> PairFeatures::scorer_inputs() const {
  std::vector<double> v{iou, d_centers, ratio_w, ratio_h};
  if (d_app) v.push_back(*d_app);
  return v;
}

PairFeatures geometry_features(const BBox& a, const BBox& b, double frame_diag) {
  PairFeatures pf;
  pf.iou = tubelink::iou(a, b);
  pf.d_centers = center_distance(a, b, frame_diag);
  pf.ratio_w = min_max_ratio(a.w, b.w);
  pf.ratio_h = min_max_ratio(a.h, b.h);
  return pf;
}

PairFeatures pair_features(const Detection& a, const Detection& b, double frame_diag) {
  if (a.embedding.has_value() != b.embedding.has_value()) {
    throw DataError("inconsistent features: embedding present on only one detection");
  }
  PairFeatures pf = geometry_features(a.bbox, b.bbox, frame_diag);
  if (a.embedding) pf.d_app = euclidean(*a.embedding, *b.embedding);
  pf.f_sem = dot(a.confidences, b.confidences);
  return pf;
}

}  // namespace tubelink
