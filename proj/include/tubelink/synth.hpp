#pragma once

#include <cstdint>

#include "tubelink/core.hpp"
#include "tubelink/dataset.hpp"

namespace tubelink {

/// Synthetic sequences and detector noise model.
///
/// Objects move at constant speed with a random-walk heading and reflect at
/// the frame borders. Each track has a latent appearance vector; raw features
/// are the latent plus Gaussian noise in the first `informative_dims`
/// dimensions, and pure nuisance noise in the rest.
struct SynthConfig {
  int n_videos = 8;
  int frames_per_video = 120;
  double fps = 30.0;
  int frame_width = 640;
  int frame_height = 480;
  int objects_min = 2;
  int objects_max = 4;
  double speed_min = 0.0;  // px / frame
  double speed_max = 8.0;
  double heading_jitter = 0.05;  // rad / frame
  double scale_drift = 0.01;      // std of the per-frame log-size random walk
  double size_min = 40.0;
  double size_max = 120.0;
  int class_count = 5;

  int feature_dim = 32;
  int informative_dims = 16;
  double feature_noise_std = 0.05;
  double nuisance_std = 0.5;
  // Class centres are scaled by this before adding a per-track unit
  // direction; larger values make same-class tracks look alike.
  double appearance_cluster_separation = 0.5;

  double drop_prob = 0.0;
  double box_jitter_std = 0.0;  // px
  double class_confusion_prob = 0.0;
  // Logit the true class keeps after a confusion swap (the wrong class gets
  // 1); 0 is a hard swap.
  double confusion_softness = 0.0;
  double false_positive_rate = 0.0;  // expected FPs per frame
  double confidence_temperature = 0.0;  // 0 -> exact one-hot
  double confidence_noise_std = 0.15;    // logit noise when temperature > 0
  // Detections scale their class vector by an objectness in (0,1]. True
  // positives dip below 1 by |N(0, objectness_dip_std * blur)|; false
  // positives draw it uniformly from [fp_objectness_min, fp_objectness_max].
  double objectness_dip_std = 0.0;
  double fp_objectness_min = 1.0;
  double fp_objectness_max = 1.0;
  // Motion blur: logit noise and objectness dips are multiplied by
  // 1 + blur_gain * speed / sqrt(box area). Jitter and confusion stay nominal.
  double blur_gain = 0.0;

  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthScene {
  GroundTruthSet ground_truth;
  FeatureTable features;
  VideoInfoMap videos;
  ClassCatalog catalog;
};

/// Deterministic per seed; each video uses its own seeded stream.
SynthScene generate(const SynthConfig& cfg);

/// Detector outputs for the scene under the configured noise model.
DetectionSet corrupt(const SynthScene& scene, const SynthConfig& cfg);

}  // namespace tubelink
