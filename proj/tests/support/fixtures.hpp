#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tubelink/core.hpp"

namespace fixture {

inline tubelink::Detection det(int frame, tubelink::DetectionId id, tubelink::BBox box,
                               tubelink::ClassConfidences cc, std::string video = "v") {
  tubelink::Detection d;
  d.video_id = std::move(video);
  d.frame_index = frame;
  d.detection_id = id;
  d.bbox = box;
  d.confidences = std::move(cc);
  return d;
}

inline tubelink::ClassConfidences onehot(std::size_t n, std::size_t k) {
  tubelink::ClassConfidences c(n, 0.0);
  c[k] = 1.0;
  return c;
}

inline tubelink::BBox random_box(std::mt19937_64& rng, double extent = 100.0) {
  std::uniform_real_distribution<double> pos(0.0, extent), size(1.0, extent / 2);
  return {pos(rng), pos(rng), size(rng), size(rng)};
}

inline std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                      double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline std::vector<double> unit_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  double s = 0;
  for (auto& x : v) {
    x = g(rng);
    s += x * x;
  }
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tubelink_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture
