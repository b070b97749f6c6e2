#include "tubelink/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

namespace tubelink {

const char* to_string(MotionClass m) {
  switch (m) {
    case MotionClass::slow:
      return "slow";
    case MotionClass::medium:
      return "medium";
    case MotionClass::fast:
      return "fast";
  }
  return "?";
}

void EvalConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
    throw InvalidArgument("iou_threshold must be in (0,1)");
  if (!(fast_threshold > 0.0 && fast_threshold < slow_threshold && slow_threshold < 1.0))
    throw InvalidArgument("motion thresholds must satisfy 0 < fast < slow < 1");
  if (motion_window < 1) throw InvalidArgument("motion_window must be >= 1");
  if (sampling_period_ms && !(*sampling_period_ms > 0.0))
    throw InvalidArgument("sampling period must be > 0");
  if (min_track_len < 1) throw InvalidArgument("min_track_len must be >= 1");
}

std::optional<double> average_precision(std::span<const ScoredBox> detections,
                                        std::span<const GtEntry> ground_truth, double iou_thr) {
  std::size_t n_pos = 0;
  std::map<FrameKey, std::vector<std::size_t>> gt_by_frame;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    gt_by_frame[ground_truth[i].key].push_back(i);
    if (ground_truth[i].counted) ++n_pos;
  }
  if (n_pos == 0) return std::nullopt;

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });

  std::vector<char> matched(ground_truth.size(), 0);
  std::vector<char> is_tp;  // one entry per non-ignored detection, in rank order
  is_tp.reserve(detections.size());
  for (std::size_t d : order) {
    const auto& det = detections[d];
    std::ptrdiff_t best = -1;
    double best_iou = -1.0;
    if (auto it = gt_by_frame.find(det.key); it != gt_by_frame.end()) {
      for (std::size_t g : it->second) {
        if (matched[g]) continue;
        const double o = iou(det.bbox, ground_truth[g].bbox);
        if (o >= iou_thr && o > best_iou) {
          best_iou = o;
          best = static_cast<std::ptrdiff_t>(g);
        }
      }
    }
    if (best < 0) {
      is_tp.push_back(0);
      continue;
    }
    matched[best] = 1;
    if (ground_truth[best].counted) is_tp.push_back(1);
  }

  // Precision/recall curve, then area under the monotone precision envelope.
  const std::size_t n = is_tp.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += is_tp[i];
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_pos);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

std::vector<std::optional<MotionClass>> classify_motion(std::span<const GroundTruthBox> track,
                                                        const EvalConfig& cfg) {
  std::vector<std::optional<MotionClass>> labels(track.size());
  if (track.size() < 2) return labels;
  for (std::size_t i = 0; i < track.size(); ++i) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < track.size(); ++j) {
      if (j == i) continue;
      const int gap = std::abs(track[j].frame_index - track[i].frame_index);
      if (gap == 0 || gap > cfg.motion_window) continue;
      sum += iou(track[i].bbox, track[j].bbox);
      ++count;
    }
    if (count == 0) continue;
    const double score = sum / static_cast<double>(count);
    labels[i] = score > cfg.slow_threshold   ? MotionClass::slow
                : score < cfg.fast_threshold ? MotionClass::fast
                                             : MotionClass::medium;
  }
  return labels;
}

std::map<std::string, std::vector<std::optional<MotionClass>>> classify_motion(
    const GroundTruthSet& gt, const EvalConfig& cfg) {
  std::map<std::string, std::vector<std::optional<MotionClass>>> out;
  for (const auto& [video, boxes] : gt) {
    auto& labels = out[video];
    labels.resize(boxes.size());
    std::map<int, std::vector<std::size_t>> by_track;
    for (std::size_t i = 0; i < boxes.size(); ++i) by_track[boxes[i].track_id].push_back(i);
    for (const auto& [track_id, idx] : by_track) {
      std::vector<GroundTruthBox> track;
      for (std::size_t i : idx) track.push_back(boxes[i]);
      const auto track_labels = classify_motion(track, cfg);
      for (std::size_t k = 0; k < idx.size(); ++k) labels[idx[k]] = track_labels[k];
    }
  }
  return out;
}

std::vector<int> subsample_frames(int frame_count, double fps, double period_ms) {
  if (!(period_ms > 0.0)) throw InvalidArgument("sampling period must be > 0");
  if (!(fps > 0.0)) throw InvalidArgument("fps must be > 0");
  std::vector<int> frames;
  for (long k = 0;; ++k) {
    const double t_ms = static_cast<double>(k) * period_ms;
    const long idx = std::lround(t_ms * fps / 1000.0);
    if (idx >= frame_count) break;
    if (frames.empty() || frames.back() != idx) frames.push_back(static_cast<int>(idx));
  }
  return frames;
}

std::vector<GroundTruthBox> subsample_ground_truth(std::span<const GroundTruthBox> gt,
                                                   std::span<const int> frames, int min_track_len) {
  const std::set<int> keep(frames.begin(), frames.end());
  std::map<std::pair<std::string, int>, int> track_len;
  for (const auto& g : gt)
    if (keep.count(g.frame_index)) ++track_len[{g.video_id, g.track_id}];
  std::vector<GroundTruthBox> out;
  for (const auto& g : gt) {
    if (!keep.count(g.frame_index)) continue;
    if (track_len[{g.video_id, g.track_id}] < min_track_len) continue;
    out.push_back(g);
  }
  return out;
}

namespace {

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (!v) continue;
    sum += *v;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

EvalReport evaluate(const DetectionSet& detections, const GroundTruthSet& gt,
                    const ClassCatalog& catalog, const EvalConfig& cfg,
                    const ProcessedFrames* processed) {
  cfg.validate();
  const std::size_t n_classes = catalog.size();
  const auto motion = classify_motion(gt, cfg);

  struct LabeledGt {
    GtEntry entry;
    int class_id;
    std::optional<MotionClass> motion;
  };
  std::vector<LabeledGt> gts;
  std::vector<std::pair<int, ScoredBox>> dets;  // (class, box)
  EvalReport report;
  std::set<std::string> videos;

  for (const auto& [video, boxes] : gt) {
    videos.insert(video);
    const auto& labels = motion.at(video);
    std::vector<GroundTruthBox> kept(boxes.begin(), boxes.end());
    std::vector<std::optional<MotionClass>> kept_labels(labels);
    if (processed != nullptr) {
      if (auto it = processed->find(video); it != processed->end()) {
        const auto sub = subsample_ground_truth(boxes, it->second, cfg.min_track_len);
        std::set<std::tuple<int, int>> survivors;
        for (const auto& g : sub) survivors.insert({g.frame_index, g.track_id});
        kept.clear();
        kept_labels.clear();
        for (std::size_t i = 0; i < boxes.size(); ++i) {
          if (!survivors.count({boxes[i].frame_index, boxes[i].track_id})) continue;
          kept.push_back(boxes[i]);
          kept_labels.push_back(labels[i]);
        }
      }
    }
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const auto& g = kept[i];
      if (g.class_id < 0 || static_cast<std::size_t>(g.class_id) >= n_classes)
        throw DataError("ground-truth class id out of catalog range");
      gts.push_back({{{video, g.frame_index}, g.bbox, true}, g.class_id, kept_labels[i]});
    }
  }

  for (const auto& [video, frames] : detections) {
    videos.insert(video);
    std::optional<std::set<int>> allowed;
    if (processed != nullptr) {
      if (auto it = processed->find(video); it != processed->end())
        allowed.emplace(it->second.begin(), it->second.end());
    }
    for (const auto& [frame, list] : frames) {
      if (allowed && !allowed->count(frame)) continue;
      for (const auto& d : list) {
        if (d.confidences.size() != n_classes)
          throw DataError("detection score length does not match class catalog");
        dets.push_back({d.top_class(), {{video, frame}, d.bbox, d.max_confidence()}});
      }
    }
  }

  report.counts.videos = videos.size();
  report.counts.gt_boxes = gts.size();
  report.counts.detections = dets.size();

  std::vector<std::optional<double>> all_aps, slow_aps, medium_aps, fast_aps;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::vector<ScoredBox> class_dets;
    for (const auto& [cls, box] : dets)
      if (static_cast<std::size_t>(cls) == c) class_dets.push_back(box);
    std::vector<GtEntry> class_gt;
    std::vector<std::optional<MotionClass>> class_motion;
    for (const auto& g : gts) {
      if (static_cast<std::size_t>(g.class_id) != c) continue;
      class_gt.push_back(g.entry);
      class_motion.push_back(g.motion);
    }
    ClassAp row;
    row.name = catalog.name(c);
    row.all = average_precision(class_dets, class_gt, cfg.iou_threshold);
    auto stratum = [&](MotionClass m) {
      std::vector<GtEntry> filtered(class_gt);
      for (std::size_t i = 0; i < filtered.size(); ++i) filtered[i].counted = class_motion[i] == m;
      return average_precision(class_dets, filtered, cfg.iou_threshold);
    };
    row.slow = stratum(MotionClass::slow);
    row.medium = stratum(MotionClass::medium);
    row.fast = stratum(MotionClass::fast);
    all_aps.push_back(row.all);
    slow_aps.push_back(row.slow);
    medium_aps.push_back(row.medium);
    fast_aps.push_back(row.fast);
    report.per_class.push_back(std::move(row));
  }
  report.map_all = mean_of(all_aps).value_or(0.0);
  report.map_slow = mean_of(slow_aps);
  report.map_medium = mean_of(medium_aps);
  report.map_fast = mean_of(fast_aps);
  return report;
}

AssociationStats association_accuracy(const VideoDetections& frames,
                                       std::span<const Tubelet> tubelets,
                                       std::span<const GroundTruthBox> gt, double match_iou) {
  // Position of each detection inside its tubelet.
  std::map<std::pair<int, DetectionId>, std::pair<TubeletId, std::size_t>> where;
  for (const auto& t : tubelets)
    for (std::size_t i = 0; i < t.members.size(); ++i)
      where[{t.members[i].frame_index, t.members[i].detection_id}] = {t.tubelet_id, i};

  std::map<int, std::vector<const GroundTruthBox*>> gt_by_frame;
  for (const auto& g : gt) gt_by_frame[g.frame_index].push_back(&g);

  // Per frame: track id -> detection id, by greedy highest-IoU matching.
  std::map<int, std::map<int, DetectionId>> assigned;
  for (const auto& [frame, dets] : frames) {
    auto it = gt_by_frame.find(frame);
    if (it == gt_by_frame.end()) continue;
    struct Cand {
      double o;
      std::size_t g, d;
    };
    std::vector<Cand> cands;
    for (std::size_t g = 0; g < it->second.size(); ++g)
      for (std::size_t d = 0; d < dets.size(); ++d) {
        const double o = iou(it->second[g]->bbox, dets[d].bbox);
        if (o >= match_iou) cands.push_back({o, g, d});
      }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.o > b.o; });
    std::vector<char> g_used(it->second.size(), 0), d_used(dets.size(), 0);
    for (const auto& c : cands) {
      if (g_used[c.g] || d_used[c.d]) continue;
      g_used[c.g] = d_used[c.d] = 1;
      assigned[frame][it->second[c.g]->track_id] = dets[c.d].detection_id;
    }
  }

  AssociationStats stats;
  const std::map<int, std::vector<Detection>>::const_iterator end = frames.end();
  for (auto cur = frames.begin(); cur != end; ++cur) {
    auto nxt = std::next(cur);
    if (nxt == end) break;
    auto a_it = assigned.find(cur->first);
    auto b_it = assigned.find(nxt->first);
    if (a_it == assigned.end() || b_it == assigned.end()) continue;
    for (const auto& [track, det_a] : a_it->second) {
      auto match_b = b_it->second.find(track);
      if (match_b == b_it->second.end()) continue;
      ++stats.pairs;
      const auto pa = where.find({cur->first, det_a});
      const auto pb = where.find({nxt->first, match_b->second});
      if (pa == where.end() || pb == where.end()) continue;
      if (pa->second.first == pb->second.first && pb->second.second == pa->second.second + 1)
        ++stats.correct;
    }
  }
  return stats;
}

}  // namespace tubelink
