#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tubelink/core.hpp"

namespace tubelink {

/// Single fully connected layer followed by L2 normalization:
/// embed(x) = normalize(W x + b), W is output_dim x input_dim (row-major).
class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(std::size_t input_dim, std::size_t output_dim);
  EmbeddingModel(std::size_t input_dim, std::size_t output_dim, std::vector<double> weights,
                 std::vector<double> bias);

  /// Uniform init in [-1/sqrt(D), 1/sqrt(D)], zero bias.
  static EmbeddingModel initialized(std::size_t input_dim, std::size_t output_dim,
                                    std::uint64_t seed);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }
  std::vector<double>& weights() { return weights_; }
  std::vector<double>& bias() { return bias_; }

  double& weight(std::size_t row, std::size_t col) { return weights_[row * input_dim_ + col]; }
  double weight(std::size_t row, std::size_t col) const {
    return weights_[row * input_dim_ + col];
  }

  /// Affine part only (W x + b).
  std::vector<double> project(std::span<const double> raw) const;

  /// Throws InvalidArgument on length mismatch and NumericError when
  /// ||W x + b|| < 1e-12.
  AppearanceEmbedding embed(std::span<const double> raw) const;

 private:
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

/// Raw features of one (anchor, positive, negative) triple.
struct TripletFeatures {
  std::span<const double> anchor;
  std::span<const double> positive;
  std::span<const double> negative;
};

struct TripletTrainConfig {
  double margin = 0.2;
  double learning_rate = 0.05;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::size_t output_dim = 256;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Hinge term of one triplet: [|f(a)-f(p)|^2 - |f(a)-f(n)|^2 + margin]_+.
double triplet_term(const AppearanceEmbedding& a, const AppearanceEmbedding& p,
                    const AppearanceEmbedding& n, double margin);

/// Sum of hinge terms over the batch.
double triplet_loss(const EmbeddingModel& model, std::span<const TripletFeatures> batch,
                    double margin);

struct EmbeddingGradient {
  std::vector<double> weights;
  std::vector<double> bias;
  double loss = 0.0;
  std::size_t active = 0;  // triplets with a positive hinge
};

/// Loss (sum over batch) and its exact gradient wrt W and b.
EmbeddingGradient triplet_loss_gradient(const EmbeddingModel& model,
                                        std::span<const TripletFeatures> batch, double margin);

/// Fraction of triplets with d(a,p) < d(a,n) in embedding space.
double triplet_accuracy(const EmbeddingModel& model, std::span<const TripletFeatures> triplets);

struct EmbeddingEpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean hinge per triplet
  double val_accuracy = 0.0;
};

struct EmbeddingTrainResult {
  EmbeddingModel model;
  std::vector<EmbeddingEpochLog> log;
  double best_val_accuracy = 0.0;
};

/// Mini-batch SGD on the triplet loss. Returns the epoch with the best
/// validation triplet accuracy (epoch 0 is the initialization).
EmbeddingTrainResult train_embedding(std::span<const TripletFeatures> train,
                                     std::span<const TripletFeatures> validation,
                                     const TripletTrainConfig& config);

}  // namespace tubelink
