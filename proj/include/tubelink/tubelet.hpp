#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "tubelink/core.hpp"
#include "tubelink/linkscore.hpp"

namespace tubelink {

struct LinkingConfig {
  double link_threshold = 0.7;  // 0.05 for sparse (subsampled) processing

  void validate() const;
};

/// Link scores between detections of frame t (rows) and t+1 (cols).
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t rows, std::size_t cols);
  ScoreMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

using Link = std::pair<std::size_t, std::size_t>;

/// Repeatedly takes the largest remaining entry >= threshold and suppresses
/// its row and column. Ties go to the smaller row, then the smaller column.
/// Links are returned in selection order.
std::vector<Link> greedy_match(const ScoreMatrix& m, double threshold);

/// Scores a candidate link between detections of adjacent processed frames.
class LinkScorer {
 public:
  virtual ~LinkScorer() = default;
  virtual double score(const Detection& a, const Detection& b) const = 0;
};

/// Learned link score: f_sem * logistic(f_loc, f_geo, f_app).
class LearnedLinkScorer final : public LinkScorer {
 public:
  LearnedLinkScorer(LinkScorerModel model, double frame_diag);
  double score(const Detection& a, const Detection& b) const override;

 private:
  LinkScorerModel model_;
  double frame_diag_;
};

/// Plain IoU baseline used for comparisons.
class IouLinkScorer final : public LinkScorer {
 public:
  double score(const Detection& a, const Detection& b) const override;
};

ScoreMatrix build_score_matrix(const std::vector<Detection>& current,
                               const std::vector<Detection>& next, const LinkScorer& scorer);

/// Links one video. `frames` holds the detections of each processed frame in
/// ascending frame order. Every detection ends up in exactly one tubelet;
/// unmatched detections become singletons. Tubelet ids are 0.. in order of
/// (first frame, position of first member).
std::vector<Tubelet> link_video(const VideoDetections& frames, const LinkScorer& scorer,
                                const LinkingConfig& config);

}  // namespace tubelink
