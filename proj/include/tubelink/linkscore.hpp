#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tubelink/linkfeat.hpp"

namespace tubelink {

/// Logistic regression over standardized pair features.
/// Feature order: [iou, d_centers, ratio_w, ratio_h, (d_app)].
struct LinkScorerModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> feature_means;
  std::vector<double> feature_stds;
  bool uses_appearance = true;

  std::size_t feature_count() const { return uses_appearance ? 5 : 4; }

  /// w = 0, bias = 0, identity standardization.
  static LinkScorerModel zero(bool uses_appearance);

  /// Throws DataError on inconsistent lengths, non-finite weights or stds <= 0.
  void validate() const;
};

double sigmoid(double z);

/// sigmoid(w . standardize(x) + bias) for a raw scorer input vector.
double scorer_probability(const LinkScorerModel& model, std::span<const double> inputs);

/// Throws DataError when appearance presence does not match the model.
double scorer_probability(const LinkScorerModel& model, const PairFeatures& pf);

/// f_sem * scorer probability.
double link_score(const LinkScorerModel& model, const PairFeatures& pf);

struct LinkPair {
  std::vector<double> features;  // scorer inputs, fixed order
  int label = 0;                 // 1 same instance, 0 different
};

struct LogLossResult {
  double loss = 0.0;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};

/// Mean log-loss + l2/2 |w|^2 over already-standardized rows and its gradient.
LogLossResult log_loss_gradient(std::span<const double> weights, double bias,
                                std::span<const std::vector<double>> standardized,
                                std::span<const int> labels, double l2_lambda);

struct LinkScorerTrainConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 500;
  double l2_lambda = 1e-4;
  double validation_fraction = 0.2;  // used only when no explicit validation set
  std::uint64_t seed = 0;

  void validate() const;
};

struct LinkScorerEpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
};

struct LinkScorerTrainResult {
  LinkScorerModel model;
  std::vector<LinkScorerEpochLog> log;
  double validation_auc = 0.0;
  double validation_accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
};

/// Rank-based ROC AUC; ties count one half. Requires both labels present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Full-batch gradient descent. When `validation` is empty a seeded
/// `validation_fraction` split of `pairs` is held out.
LinkScorerTrainResult train_link_scorer(std::span<const LinkPair> pairs,
                                        std::span<const LinkPair> validation,
                                        const LinkScorerTrainConfig& config);

}  // namespace tubelink
