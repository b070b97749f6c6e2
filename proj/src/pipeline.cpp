#include "tubelink/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

namespace tubelink {

std::map<std::string, std::vector<Tubelet>> PostprocessResult::tubelets() const {
  std::map<std::string, std::vector<Tubelet>> out;
  for (const auto& [vid, r] : videos) out[vid] = r.tubelets;
  return out;
}

DetectionSet PostprocessResult::original_detections() const {
  DetectionSet out;
  for (const auto& [vid, r] : videos)
    for (const auto& [f, dets] : r.frames)
      if (!dets.empty()) out[vid][f] = dets;
  return out;
}

DetectionSet PostprocessResult::refined_detections() const {
  DetectionSet out;
  for (const auto& [vid, r] : videos) {
    auto& video = out[vid];
    for (const auto& [f, dets] : r.frames)
      if (!dets.empty()) video[f] = dets;
    std::map<std::pair<int, DetectionId>, Detection*> index;
    for (auto& [f, dets] : video)
      for (auto& d : dets) index[{f, d.detection_id}] = &d;
    for (const auto& t : r.tubelets)
      for (std::size_t i = 0; i < t.members.size(); ++i) {
        Detection& d = *index.at({t.members[i].frame_index, t.members[i].detection_id});
        if (t.refined_confidences) d.confidences = *t.refined_confidences;
        if (t.smoothed_boxes) d.bbox = (*t.smoothed_boxes)[i];
      }
  }
  return out;
}

ProcessedFrames PostprocessResult::processed_frames() const {
  ProcessedFrames out;
  for (const auto& [vid, r] : videos) {
    auto& list = out[vid];
    for (const auto& [f, dets] : r.frames) list.push_back(f);
  }
  return out;
}

std::vector<int> processed_frame_list(const VideoDetections& frames, const VideoInfo& info,
                                      std::optional<double> sampling_period_ms) {
  int frame_count = info.frame_count;
  if (!frames.empty()) frame_count = std::max(frame_count, frames.rbegin()->first + 1);
  if (sampling_period_ms) return subsample_frames(frame_count, info.fps, *sampling_period_ms);
  std::vector<int> all(static_cast<std::size_t>(std::max(frame_count, 0)));
  for (int i = 0; i < frame_count; ++i) all[i] = i;
  return all;
}

namespace {

VideoResult process_video(const VideoDetections& input, const LinkScorerModel* linker,
                          const EmbeddingModel* embedding, const VideoInfo& info,
                          const PostprocessConfig& cfg) {
  VideoResult r;
  for (int f : processed_frame_list(input, info, cfg.sampling_period_ms)) {
    auto& slot = r.frames[f];
    if (auto it = input.find(f); it != input.end()) slot = it->second;
  }
  if (embedding != nullptr) {
    for (auto& [f, dets] : r.frames)
      for (auto& d : dets) {
        if (!d.raw_feature) {
          if (d.embedding) continue;
          throw DataError("detection " + std::to_string(d.detection_id) + " in video " + d.video_id +
                          " has no raw feature to embed");
        }
        d.embedding = embedding->embed(*d.raw_feature);
      }
  }
  if (linker != nullptr && !linker->uses_appearance)
    for (auto& [f, dets] : r.frames)
      for (auto& d : dets) d.embedding.reset();
  std::unique_ptr<LinkScorer> scorer;
  if (linker != nullptr)
    scorer = std::make_unique<LearnedLinkScorer>(*linker, info.diagonal());
  else
    scorer = std::make_unique<IouLinkScorer>();
  r.tubelets = link_video(r.frames, *scorer, cfg.linking);
  refine_tubelets(r.tubelets, r.frames, cfg.smoothing);
  return r;
}

}  // namespace

PostprocessResult postprocess(const DetectionSet& detections, const LinkScorerModel* linker,
                              const EmbeddingModel* embedding, const VideoInfoMap& videos,
                              const PostprocessConfig& cfg) {
  cfg.linking.validate();
  cfg.smoothing.validate();
  if (linker != nullptr) linker->validate();

  std::vector<const std::string*> ids;
  for (const auto& [vid, frames] : detections) ids.push_back(&vid);
  std::vector<VideoResult> results(ids.size());

  const auto start = std::chrono::steady_clock::now();
  auto run_one = [&](std::size_t i) {
    const auto it = videos.find(*ids[i]);
    const VideoInfo& info = it != videos.end() ? it->second : cfg.default_video;
    results[i] = process_video(detections.at(*ids[i]), linker, embedding, info, cfg);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(ids.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < ids.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < ids.size();) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }
  const auto stop = std::chrono::steady_clock::now();

  PostprocessResult out;
  out.elapsed_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.frames_processed += results[i].frames.size();
    out.videos[*ids[i]] = std::move(results[i]);
  }
  return out;
}

}  // namespace tubelink
