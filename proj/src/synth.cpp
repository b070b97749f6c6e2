#include "tubelink/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace tubelink {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt) {
  return splitmix64(splitmix64(seed ^ (salt * 0x632be59bd9b4e019ULL)) + stream);
}

std::string video_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "v%03d", i);
  return buf;
}

std::vector<double> random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    for (double& x : v) x = n01(rng);
    norm = l2_norm(v);
  } while (norm < 1e-9);
  for (double& x : v) x /= norm;
  return v;
}

std::vector<double> observe_feature(std::mt19937_64& rng, const std::vector<double>& latent,
                                    const SynthConfig& cfg) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> f(cfg.feature_dim);
  for (int i = 0; i < cfg.feature_dim; ++i) {
    f[i] = i < cfg.informative_dims ? latent[i] + cfg.feature_noise_std * noise(rng)
                                    : cfg.nuisance_std * noise(rng);
  }
  return f;
}

ClassConfidences confidences_for(std::mt19937_64& rng, int cls, int true_cls, double noise_scale,
                                 const SynthConfig& cfg) {
  ClassConfidences cc(cfg.class_count, 0.0);
  if (cfg.confidence_temperature <= 0.0) {
    cc[cls] = 1.0;
    return cc;
  }
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> z(cfg.class_count);
  for (int k = 0; k < cfg.class_count; ++k)
    z[k] = ((k == cls ? 1.0 : k == true_cls ? cfg.confusion_softness : 0.0) + cfg.confidence_noise_std * noise_scale * n01(rng)) /
           cfg.confidence_temperature;
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (int k = 0; k < cfg.class_count; ++k) sum += (cc[k] = std::exp(z[k] - zmax));
  for (double& v : cc) v /= sum;
  return cc;
}

}  // namespace

void SynthConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(name) + " must be in [0,1]");
  };
  prob(drop_prob, "drop_prob");
  prob(class_confusion_prob, "class_confusion_prob");
  prob(confusion_softness, "confusion_softness");
  if (n_videos < 1 || frames_per_video < 1) throw InvalidArgument("n_videos and frames_per_video must be >= 1");
  if (!(fps > 0.0)) throw InvalidArgument("fps must be > 0");
  if (frame_width < 1 || frame_height < 1) throw InvalidArgument("frame size must be positive");
  if (objects_min < 1 || objects_max < objects_min) throw InvalidArgument("objects range invalid");
  if (!(speed_min >= 0.0 && speed_max >= speed_min)) throw InvalidArgument("speed range invalid");
  if (!(size_min > 0.0 && size_max >= size_min)) throw InvalidArgument("size range invalid");
  if (size_max >= std::min(frame_width, frame_height)) throw InvalidArgument("size_max must fit in the frame");
  if (class_count < 1) throw InvalidArgument("class_count must be >= 1");
  if (feature_dim < 1 || informative_dims < 1 || informative_dims > feature_dim)
    throw InvalidArgument("feature dimensions invalid");
  if (feature_noise_std < 0.0 || nuisance_std < 0.0 || box_jitter_std < 0.0 || heading_jitter < 0.0 ||
      false_positive_rate < 0.0 || confidence_temperature < 0.0 || confidence_noise_std < 0.0 ||
      blur_gain < 0.0 || appearance_cluster_separation < 0.0 || scale_drift < 0.0 || objectness_dip_std < 0.0)
    throw InvalidArgument("noise parameters must be non-negative");
  if (!(fp_objectness_min > 0.0 && fp_objectness_min <= fp_objectness_max && fp_objectness_max <= 1.0))
    throw InvalidArgument("fp objectness range must lie in (0,1]");
}

SynthScene generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthScene scene;
  scene.catalog = ClassCatalog::anonymous(static_cast<std::size_t>(cfg.class_count));

  std::mt19937_64 global(stream_seed(cfg.seed, 0, 1));
  std::vector<std::vector<double>> class_centres;
  for (int k = 0; k < cfg.class_count; ++k) class_centres.push_back(random_unit(global, cfg.informative_dims));

  const double W = cfg.frame_width;
  const double H = cfg.frame_height;
  for (int v = 0; v < cfg.n_videos; ++v) {
    const std::string vid = video_name(v);
    scene.videos[vid] = VideoInfo{cfg.fps, W, H, cfg.frames_per_video};
    auto& boxes = scene.ground_truth[vid];
    std::mt19937_64 rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(v), 2));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    const int n_obj = std::uniform_int_distribution<int>(cfg.objects_min, cfg.objects_max)(rng);

    struct Object {
      double x, y, w, h, speed, heading;
      double base_w, base_h, log_scale;
      int cls;
      std::vector<double> latent;
    };
    std::vector<Object> objects;
    for (int o = 0; o < n_obj; ++o) {
      Object ob{};
      ob.w = cfg.size_min + (cfg.size_max - cfg.size_min) * u01(rng);
      ob.h = cfg.size_min + (cfg.size_max - cfg.size_min) * u01(rng);
      ob.base_w = ob.w;
      ob.base_h = ob.h;
      ob.log_scale = 0.0;
      ob.x = (W - ob.w) * u01(rng);
      ob.y = (H - ob.h) * u01(rng);
      ob.speed = cfg.speed_min + (cfg.speed_max - cfg.speed_min) * u01(rng);
      ob.heading = 2.0 * std::numbers::pi * u01(rng);
      ob.cls = std::uniform_int_distribution<int>(0, cfg.class_count - 1)(rng);
      auto dir = random_unit(rng, cfg.informative_dims);
      ob.latent.resize(cfg.informative_dims);
      for (int i = 0; i < cfg.informative_dims; ++i)
        ob.latent[i] = cfg.appearance_cluster_separation * class_centres[ob.cls][i] + dir[i];
      const double n = l2_norm(ob.latent);
      for (double& x : ob.latent) x /= n;
      objects.push_back(std::move(ob));
    }

    for (int f = 0; f < cfg.frames_per_video; ++f) {
      for (int o = 0; o < n_obj; ++o) {
        Object& ob = objects[o];
        if (f > 0) {
          if (cfg.scale_drift > 0.0) {
            // Sizes wander but stay within [size_min / 2, size_max].
            ob.log_scale += cfg.scale_drift * n01(rng);
            const double lo = std::log(0.5 * cfg.size_min / std::min(ob.base_w, ob.base_h));
            const double hi = std::log(cfg.size_max / std::max(ob.base_w, ob.base_h));
            ob.log_scale = std::clamp(ob.log_scale, lo, hi);
            const double s = std::exp(ob.log_scale);
            const double cx = ob.x + 0.5 * ob.w, cy = ob.y + 0.5 * ob.h;
            ob.w = ob.base_w * s;
            ob.h = ob.base_h * s;
            ob.x = cx - 0.5 * ob.w;
            ob.y = cy - 0.5 * ob.h;
          }
          ob.heading += cfg.heading_jitter * n01(rng);
          ob.x += ob.speed * std::cos(ob.heading);
          ob.y += ob.speed * std::sin(ob.heading);
          if (ob.x < 0.0) {
            ob.x = -ob.x;
            ob.heading = std::numbers::pi - ob.heading;
          } else if (ob.x + ob.w > W) {
            ob.x = 2.0 * (W - ob.w) - ob.x;
            ob.heading = std::numbers::pi - ob.heading;
          }
          if (ob.y < 0.0) {
            ob.y = -ob.y;
            ob.heading = -ob.heading;
          } else if (ob.y + ob.h > H) {
            ob.y = 2.0 * (H - ob.h) - ob.y;
            ob.heading = -ob.heading;
          }
          ob.x = std::clamp(ob.x, 0.0, W - ob.w);
          ob.y = std::clamp(ob.y, 0.0, H - ob.h);
        }
        boxes.push_back({vid, f, BBox(ob.x, ob.y, ob.w, ob.h), ob.cls, o});
        scene.features[{vid, f, o}] = observe_feature(rng, ob.latent, cfg);
      }
    }
  }
  return scene;
}

DetectionSet corrupt(const SynthScene& scene, const SynthConfig& cfg) {
  cfg.validate();
  DetectionSet out;
  int video_index = 0;
  for (const auto& [vid, boxes] : scene.ground_truth) {
    std::mt19937_64 rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(video_index++), 3));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::poisson_distribution<int> n_fp(cfg.false_positive_rate > 0.0 ? cfg.false_positive_rate : 1.0);
    const auto info_it = scene.videos.find(vid);
    const double W = info_it != scene.videos.end() ? info_it->second.width : cfg.frame_width;
    const double H = info_it != scene.videos.end() ? info_it->second.height : cfg.frame_height;

    // Per-box speed from neighbouring annotations of the same track.
    std::map<std::pair<int, int>, const GroundTruthBox*> by_key;
    int last_frame = -1;
    for (const auto& g : boxes) {
      by_key[{g.track_id, g.frame_index}] = &g;
      last_frame = std::max(last_frame, g.frame_index);
    }
    auto speed_of = [&](const GroundTruthBox& g) {
      const GroundTruthBox* other = nullptr;
      if (auto it = by_key.find({g.track_id, g.frame_index - 1}); it != by_key.end()) other = it->second;
      else if (auto jt = by_key.find({g.track_id, g.frame_index + 1}); jt != by_key.end()) other = jt->second;
      if (other == nullptr) return 0.0;
      const Point a = g.bbox.center(), b = other->bbox.center();
      return std::hypot(a.x - b.x, a.y - b.y);
    };

    std::map<int, std::vector<const GroundTruthBox*>> by_frame;
    for (const auto& g : boxes) by_frame[g.frame_index].push_back(&g);

    auto& video = out[vid];
    DetectionId next_id = 0;
    for (int f = 0; f <= last_frame; ++f) {
      std::vector<Detection> dets;
      if (auto it = by_frame.find(f); it != by_frame.end()) {
        for (const GroundTruthBox* g : it->second) {
          if (u01(rng) < cfg.drop_prob) continue;
          // Blur grows with displacement relative to object size.
          const double blur = 1.0 + cfg.blur_gain * speed_of(*g) / std::sqrt(g->bbox.area());
          Detection d;
          d.video_id = vid;
          d.frame_index = f;
          const double js = cfg.box_jitter_std;
          const double w = std::max(1.0, g->bbox.w + js * n01(rng));
          const double h = std::max(1.0, g->bbox.h + js * n01(rng));
          d.bbox = BBox(g->bbox.x + js * n01(rng), g->bbox.y + js * n01(rng), w, h);
          if (js == 0.0) d.bbox = g->bbox;
          int cls = g->class_id;
          if (cfg.class_count > 1 && u01(rng) < cfg.class_confusion_prob) {
            cls = std::uniform_int_distribution<int>(0, cfg.class_count - 2)(rng);
            if (cls >= g->class_id) ++cls;
          }
          d.confidences = confidences_for(rng, cls, g->class_id, blur, cfg);
          if (cfg.objectness_dip_std > 0.0) {
            const double o = std::clamp(1.0 - std::abs(cfg.objectness_dip_std * blur * n01(rng)), 0.05, 1.0);
            for (double& c : d.confidences) c *= o;
          }
          if (auto ft = scene.features.find({vid, f, g->track_id}); ft != scene.features.end())
            d.raw_feature = ft->second;
          dets.push_back(std::move(d));
        }
      }
      const int fps_here = cfg.false_positive_rate > 0.0 ? n_fp(rng) : 0;
      for (int k = 0; k < fps_here; ++k) {
        Detection d;
        d.video_id = vid;
        d.frame_index = f;
        const double w = cfg.size_min + (cfg.size_max - cfg.size_min) * u01(rng);
        const double h = cfg.size_min + (cfg.size_max - cfg.size_min) * u01(rng);
        d.bbox = BBox((W - w) * u01(rng), (H - h) * u01(rng), w, h);
        const int cls = std::uniform_int_distribution<int>(0, cfg.class_count - 1)(rng);
        d.confidences = confidences_for(rng, cls, cls, 1.0, cfg);
        if (cfg.fp_objectness_max < 1.0 || cfg.fp_objectness_min < 1.0) {
          const double o = cfg.fp_objectness_min + (cfg.fp_objectness_max - cfg.fp_objectness_min) * u01(rng);
          for (double& c : d.confidences) c *= o;
        }
        if (!scene.features.empty()) {
          auto latent = random_unit(rng, cfg.informative_dims);
          d.raw_feature = observe_feature(rng, latent, cfg);
        }
        dets.push_back(std::move(d));
      }
      for (auto& d : dets) d.detection_id = next_id++;
      if (!dets.empty()) video[f] = std::move(dets);
    }
  }
  return out;
}

}  // namespace tubelink
