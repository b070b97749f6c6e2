#include "tubelink/embed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace tubelink {

namespace {

constexpr double kDegenerateNorm = 1e-12;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Forward state kept for backprop through normalize(Wx + b).
struct Forward {
  std::vector<double> unit;
  double norm = 0.0;
};

Forward forward(const EmbeddingModel& m, std::span<const double> x) {
  Forward f;
  f.unit = m.project(x);
  f.norm = l2_norm(f.unit);
  if (!(f.norm >= kDegenerateNorm)) {
    throw NumericError("degenerate embedding: projected vector has near-zero norm");
  }
  for (double& v : f.unit) v /= f.norm;
  return f;
}

// Accumulate dL/dW, dL/db given dL/de for e = y/|y|, y = Wx + b.
void backprop(const Forward& f, std::span<const double> grad_unit, std::span<const double> x,
              EmbeddingGradient& g, std::size_t input_dim) {
  const double along = dot(grad_unit, f.unit);
  for (std::size_t r = 0; r < f.unit.size(); ++r) {
    const double gy = (grad_unit[r] - along * f.unit[r]) / f.norm;
    if (gy == 0.0) continue;
    g.bias[r] += gy;
    double* row = g.weights.data() + r * input_dim;
    for (std::size_t c = 0; c < input_dim; ++c) row[c] += gy * x[c];
  }
}

void check_lengths(const EmbeddingModel& m, const TripletFeatures& t) {
  const auto d = m.input_dim();
  if (t.anchor.size() != d || t.positive.size() != d || t.negative.size() != d) {
    throw InvalidArgument("triplet raw feature length does not match model input dimension");
  }
}

}  // namespace

EmbeddingModel::EmbeddingModel(std::size_t input_dim, std::size_t output_dim)
    : input_dim_(input_dim),
      output_dim_(output_dim),
      weights_(input_dim * output_dim, 0.0),
      bias_(output_dim, 0.0) {
  if (input_dim == 0) throw InvalidArgument("embedding input dimension must be positive");
  if (output_dim < 2) throw InvalidArgument("embedding output dimension must be >= 2");
}

EmbeddingModel::EmbeddingModel(std::size_t input_dim, std::size_t output_dim,
                               std::vector<double> weights, std::vector<double> bias)
    : EmbeddingModel(input_dim, output_dim) {
  if (weights.size() != input_dim * output_dim || bias.size() != output_dim) {
    throw DataError("embedding weight sizes inconsistent with declared dimensions");
  }
  for (double w : weights)
    if (!std::isfinite(w)) throw DataError("embedding weights must be finite");
  for (double w : bias)
    if (!std::isfinite(w)) throw DataError("embedding bias must be finite");
  weights_ = std::move(weights);
  bias_ = std::move(bias);
}

EmbeddingModel EmbeddingModel::initialized(std::size_t input_dim, std::size_t output_dim,
                                           std::uint64_t seed) {
  EmbeddingModel m(input_dim, output_dim);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : m.weights_) w = dist(rng);
  return m;
}

std::vector<double> EmbeddingModel::project(std::span<const double> raw) const {
  if (raw.size() != input_dim_) {
    std::ostringstream msg;
    msg << "raw feature has length " << raw.size() << ", model expects " << input_dim_;
    throw InvalidArgument(msg.str());
  }
  std::vector<double> y(bias_);
  for (std::size_t r = 0; r < output_dim_; ++r) {
    const double* row = weights_.data() + r * input_dim_;
    double s = 0.0;
    for (std::size_t c = 0; c < input_dim_; ++c) s += row[c] * raw[c];
    y[r] += s;
  }
  return y;
}

AppearanceEmbedding EmbeddingModel::embed(std::span<const double> raw) const {
  return forward(*this, raw).unit;
}

void TripletTrainConfig::validate() const {
  if (!(margin > 0.0)) throw InvalidArgument("margin must be > 0");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
  if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
  if (output_dim < 2) throw InvalidArgument("embedding dimension must be >= 2");
}

double triplet_term(const AppearanceEmbedding& a, const AppearanceEmbedding& p,
                    const AppearanceEmbedding& n, double margin) {
  return std::max(0.0, squared_distance(a, p) - squared_distance(a, n) + margin);
}

double triplet_loss(const EmbeddingModel& model, std::span<const TripletFeatures> batch,
                    double margin) {
  double total = 0.0;
  for (const auto& t : batch) {
    check_lengths(model, t);
    total += triplet_term(model.embed(t.anchor), model.embed(t.positive),
                          model.embed(t.negative), margin);
  }
  return total;
}

EmbeddingGradient triplet_loss_gradient(const EmbeddingModel& model,
                                        std::span<const TripletFeatures> batch, double margin) {
  EmbeddingGradient g;
  g.weights.assign(model.weights().size(), 0.0);
  g.bias.assign(model.output_dim(), 0.0);
  const std::size_t d = model.output_dim();
  std::vector<double> ga(d), gp(d), gn(d);
  for (const auto& t : batch) {
    check_lengths(model, t);
    const Forward fa = forward(model, t.anchor);
    const Forward fp = forward(model, t.positive);
    const Forward fn = forward(model, t.negative);
    const double term =
        squared_distance(fa.unit, fp.unit) - squared_distance(fa.unit, fn.unit) + margin;
    if (term <= 0.0) continue;
    g.loss += term;
    ++g.active;
    // d/da = 2(n - p), d/dp = -2(a - p), d/dn = 2(a - n)
    for (std::size_t i = 0; i < d; ++i) {
      ga[i] = 2.0 * (fn.unit[i] - fp.unit[i]);
      gp[i] = -2.0 * (fa.unit[i] - fp.unit[i]);
      gn[i] = 2.0 * (fa.unit[i] - fn.unit[i]);
    }
    backprop(fa, ga, t.anchor, g, model.input_dim());
    backprop(fp, gp, t.positive, g, model.input_dim());
    backprop(fn, gn, t.negative, g, model.input_dim());
  }
  return g;
}

double triplet_accuracy(const EmbeddingModel& model, std::span<const TripletFeatures> triplets) {
  if (triplets.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& t : triplets) {
    const auto a = model.embed(t.anchor);
    if (squared_distance(a, model.embed(t.positive)) < squared_distance(a, model.embed(t.negative)))
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(triplets.size());
}

EmbeddingTrainResult train_embedding(std::span<const TripletFeatures> train,
                                     std::span<const TripletFeatures> validation,
                                     const TripletTrainConfig& config) {
  config.validate();
  if (train.empty()) throw InvalidArgument("no training triplets");
  const std::size_t input_dim = train.front().anchor.size();

  EmbeddingTrainResult result;
  EmbeddingModel model = EmbeddingModel::initialized(input_dim, config.output_dim, config.seed);
  const auto& eval_set = validation.empty() ? train : validation;

  auto mean_loss = [&](const EmbeddingModel& m) {
    return triplet_loss(m, train, config.margin) / static_cast<double>(train.size());
  };

  result.model = model;
  result.best_val_accuracy = triplet_accuracy(model, eval_set);
  result.log.push_back({0, mean_loss(model), result.best_val_accuracy});

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<TripletFeatures> batch;
  batch.reserve(config.batch_size);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train[order[i]]);
      const EmbeddingGradient g = triplet_loss_gradient(model, batch, config.margin);
      epoch_loss += g.loss;
      if (g.active == 0) continue;
      const double step = config.learning_rate / static_cast<double>(batch.size());
      auto& w = model.weights();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * g.weights[i];
      auto& b = model.bias();
      for (std::size_t i = 0; i < b.size(); ++i) b[i] -= step * g.bias[i];
    }
    const double train_loss = epoch_loss / static_cast<double>(train.size());
    if (!std::isfinite(train_loss)) {
      std::ostringstream msg;
      msg << "embedding training diverged at epoch " << epoch << " (loss " << train_loss
          << "); lower the learning rate";
      throw NumericError(msg.str());
    }
    const double acc = triplet_accuracy(model, eval_set);
    result.log.push_back({epoch, train_loss, acc});
    if (acc > result.best_val_accuracy) {
      result.best_val_accuracy = acc;
      result.model = model;
    }
  }
  return result;
}

}  // namespace tubelink
