#include "tubelink/tubelet.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace tubelink {

void LinkingConfig::validate() const {
  if (!(link_threshold >= 0.0 && link_threshold <= 1.0))
    throw InvalidArgument("link threshold must be in [0,1]");
}

ScoreMatrix::ScoreMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

ScoreMatrix::ScoreMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) throw InvalidArgument("score matrix size mismatch");
}

std::vector<Link> greedy_match(const ScoreMatrix& m, double threshold) {
  struct Candidate {
    double score;
    std::size_t row;
    std::size_t col;
  };
  std::vector<Candidate> candidates;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (m(r, c) >= threshold) candidates.push_back({m(r, c), r, c});

  // Scanning candidates in (score desc, row asc, col asc) order and skipping
  // suppressed rows/cols selects the same links as repeated global-max search.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.score, a.row, a.col) < std::tie(a.score, b.row, b.col);
  });

  std::vector<char> row_used(m.rows(), 0), col_used(m.cols(), 0);
  std::vector<Link> links;
  for (const auto& c : candidates) {
    if (row_used[c.row] || col_used[c.col]) continue;
    row_used[c.row] = col_used[c.col] = 1;
    links.emplace_back(c.row, c.col);
  }
  return links;
}

LearnedLinkScorer::LearnedLinkScorer(LinkScorerModel model, double frame_diag)
    : model_(std::move(model)), frame_diag_(frame_diag) {
  model_.validate();
  if (!(frame_diag_ > 0.0)) throw InvalidArgument("frame_diag must be positive");
}

double LearnedLinkScorer::score(const Detection& a, const Detection& b) const {
  return link_score(model_, pair_features(a, b, frame_diag_));
}

double IouLinkScorer::score(const Detection& a, const Detection& b) const { return iou(a.bbox, b.bbox); }

ScoreMatrix build_score_matrix(const std::vector<Detection>& current,
                               const std::vector<Detection>& next, const LinkScorer& scorer) {
  ScoreMatrix m(current.size(), next.size());
  for (std::size_t r = 0; r < current.size(); ++r)
    for (std::size_t c = 0; c < next.size(); ++c) m(r, c) = scorer.score(current[r], next[c]);
  return m;
}

std::vector<Tubelet> link_video(const VideoDetections& frames, const LinkScorer& scorer,
                                const LinkingConfig& config) {
  config.validate();
  std::vector<Tubelet> tubelets;
  // Tubelet index owning each detection of the previous processed frame.
  std::vector<std::ptrdiff_t> owner_prev;
  const std::vector<Detection>* prev = nullptr;

  auto start_tubelet = [&](const Detection& d) {
    Tubelet t;
    t.members.push_back({d.frame_index, d.detection_id});
    tubelets.push_back(std::move(t));
    return static_cast<std::ptrdiff_t>(tubelets.size() - 1);
  };

  for (const auto& [frame_index, dets] : frames) {
    std::vector<std::ptrdiff_t> owner(dets.size(), -1);
    if (prev != nullptr && !prev->empty() && !dets.empty()) {
      const ScoreMatrix m = build_score_matrix(*prev, dets, scorer);
      for (const auto& [r, c] : greedy_match(m, config.link_threshold)) {
        tubelets[owner_prev[r]].members.push_back({dets[c].frame_index, dets[c].detection_id});
        owner[c] = owner_prev[r];
      }
    }
    for (std::size_t c = 0; c < dets.size(); ++c)
      if (owner[c] < 0) owner[c] = start_tubelet(dets[c]);
    owner_prev = std::move(owner);
    prev = &dets;
  }

  // Creation order already follows (first frame, position), ids are indices.
  for (std::size_t i = 0; i < tubelets.size(); ++i) tubelets[i].tubelet_id = static_cast<TubeletId>(i);
  return tubelets;
}

}  // namespace tubelink
