#pragma once

#include <optional>
#include <vector>

#include "tubelink/core.hpp"

namespace tubelink {

/// Pairwise features of a candidate link between two detections.
///
/// Location (iou, d_centers), geometry (ratio_w, ratio_h) and appearance
/// (d_app) feed the logistic scorer; f_sem gates its output.
struct PairFeatures {
  double iou = 0.0;
  double d_centers = 0.0;
  double ratio_w = 1.0;  // min/max, in (0,1]
  double ratio_h = 1.0;
  std::optional<double> d_app;
  double f_sem = 0.0;

  bool has_appearance() const { return d_app.has_value(); }

  /// Scorer input in fixed order [iou, d_centers, ratio_w, ratio_h, (d_app)].
  std::vector<double> scorer_inputs() const;
};

/// Geometric part only (no semantics, no appearance).
PairFeatures geometry_features(const BBox& a, const BBox& b, double frame_diag);

/// Throws DataError when exactly one of the detections carries an embedding.
PairFeatures pair_features(const Detection& a, const Detection& b, double frame_diag);

}  // namespace tubelink
