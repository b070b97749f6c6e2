#include "tubelink/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tubelink {

BBox::BBox(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h)) {
    throw InvalidArgument("bbox has non-finite coordinates");
  }
  if (!(w > 0.0) || !(h > 0.0)) {
    throw InvalidArgument("bbox must have positive width and height");
  }
}

double Detection::max_confidence() const {
  if (confidences.empty()) return 0.0;
  return *std::max_element(confidences.begin(), confidences.end());
}

int Detection::top_class() const {
  if (confidences.empty()) return -1;
  return static_cast<int>(std::max_element(confidences.begin(), confidences.end()) -
                          confidences.begin());
}

ClassCatalog::ClassCatalog(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw DataError("class catalog contains an empty name");
    if (!seen.insert(n).second) throw DataError("duplicate class name in catalog: " + n);
  }
}

ClassCatalog ClassCatalog::anonymous(std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) names.push_back("class_" + std::to_string(i));
  return ClassCatalog(std::move(names));
}

double VideoInfo::diagonal() const { return std::hypot(width, height); }

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double center_distance(const BBox& a, const BBox& b, double frame_diag) {
  if (!(frame_diag > 0.0)) throw InvalidArgument("frame_diag must be positive");
  const Point ca = a.center();
  const Point cb = b.center();
  return std::hypot(ca.x - cb.x, ca.y - cb.y) / frame_diag;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace tubelink
