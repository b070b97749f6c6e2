#include "tubelink/linkscore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tubelink {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

std::vector<double> standardize(const LinkScorerModel& m, std::span<const double> x) {
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - m.feature_means[i]) / m.feature_stds[i];
  return z;
}

void check_labels(std::span<const LinkPair> pairs, const char* what) {
  bool pos = false, neg = false;
  for (const auto& p : pairs) {
    if (p.label != 0 && p.label != 1) throw DataError("link pair label must be 0 or 1");
    (p.label == 1 ? pos : neg) = true;
  }
  if (!pos || !neg) throw DataError(std::string(what) + " must contain both labels");
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LinkScorerModel LinkScorerModel::zero(bool uses_appearance) {
  LinkScorerModel m;
  m.uses_appearance = uses_appearance;
  const std::size_t n = m.feature_count();
  m.weights.assign(n, 0.0);
  m.feature_means.assign(n, 0.0);
  m.feature_stds.assign(n, 1.0);
  return m;
}

void LinkScorerModel::validate() const {
  const std::size_t n = feature_count();
  if (weights.size() != n || feature_means.size() != n || feature_stds.size() != n) {
    throw DataError("link scorer arrays must have length " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(weights[i]) || !std::isfinite(feature_means[i]))
      throw DataError("link scorer weights must be finite");
    if (!(feature_stds[i] > 0.0) || !std::isfinite(feature_stds[i]))
      throw DataError("link scorer feature_stds must be strictly positive");
  }
  if (!std::isfinite(bias)) throw DataError("link scorer bias must be finite");
}

double scorer_probability(const LinkScorerModel& model, std::span<const double> inputs) {
  if (inputs.size() != model.feature_count()) {
    throw DataError("scorer input has " + std::to_string(inputs.size()) + " features, model expects " +
                    std::to_string(model.feature_count()));
  }
  double z = model.bias;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    z += model.weights[i] * ((inputs[i] - model.feature_means[i]) / model.feature_stds[i]);
  }
  return sigmoid(z);
}

double scorer_probability(const LinkScorerModel& model, const PairFeatures& pf) {
  if (pf.has_appearance() != model.uses_appearance) {
    throw DataError(model.uses_appearance
                        ? "model input error: scorer expects appearance distance, pair has none"
                        : "model input error: scorer has no appearance input, pair carries one");
  }
  return scorer_probability(model, pf.scorer_inputs());
}

double link_score(const LinkScorerModel& model, const PairFeatures& pf) {
  return pf.f_sem * scorer_probability(model, pf);
}

LogLossResult log_loss_gradient(std::span<const double> weights, double bias,
                                std::span<const std::vector<double>> standardized,
                                std::span<const int> labels, double l2_lambda) {
  LogLossResult r;
  r.grad_weights.assign(weights.size(), 0.0);
  const std::size_t n = standardized.size();
  if (n == 0) return r;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& x = standardized[k];
    double z = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * x[i];
    r.loss += labels[k] == 1 ? softplus(-z) : softplus(z);
    const double residual = sigmoid(z) - static_cast<double>(labels[k]);
    for (std::size_t i = 0; i < weights.size(); ++i) r.grad_weights[i] += residual * x[i];
    r.grad_bias += residual;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  r.loss *= inv_n;
  r.grad_bias *= inv_n;
  double wsq = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    r.grad_weights[i] = r.grad_weights[i] * inv_n + l2_lambda * weights[i];
    wsq += weights[i] * weights[i];
  }
  r.loss += 0.5 * l2_lambda * wsq;
  return r;
}

void LinkScorerTrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
  if (!(l2_lambda >= 0.0)) throw InvalidArgument("l2 must be >= 0");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw InvalidArgument("validation_fraction must be in [0,1)");
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks over ties, then Mann-Whitney U.
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      } else {
        ++n_neg;
      }
    }
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw DataError("AUC needs both labels");
  const double u = rank_sum_pos - static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

LinkScorerTrainResult train_link_scorer(std::span<const LinkPair> pairs,
                                        std::span<const LinkPair> validation,
                                        const LinkScorerTrainConfig& config) {
  config.validate();
  if (pairs.empty()) throw DataError("no link pairs to train on");
  const std::size_t dim = pairs.front().features.size();
  if (dim != 4 && dim != 5) throw DataError("link pairs must carry 4 or 5 features");
  for (const auto& p : pairs)
    if (p.features.size() != dim) throw DataError("link pairs have inconsistent feature counts");
  check_labels(pairs, "training pairs");

  std::vector<LinkPair> train;
  std::vector<LinkPair> val(validation.begin(), validation.end());
  if (val.empty() && config.validation_fraction > 0.0) {
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_val = static_cast<std::size_t>(
        std::llround(config.validation_fraction * static_cast<double>(pairs.size())));
    for (std::size_t i = 0; i < order.size(); ++i)
      (i < n_val ? val : train).push_back(pairs[order[i]]);
  } else {
    train.assign(pairs.begin(), pairs.end());
  }
  check_labels(train, "training split");
  for (const auto& p : val)
    if (p.features.size() != dim) throw DataError("validation pairs have inconsistent feature counts");

  LinkScorerTrainResult result;
  result.train_size = train.size();
  result.validation_size = val.size();
  LinkScorerModel& model = result.model;
  model = LinkScorerModel::zero(dim == 5);

  const double n = static_cast<double>(train.size());
  for (std::size_t i = 0; i < dim; ++i) {
    double mean = 0.0;
    for (const auto& p : train) mean += p.features[i];
    mean /= n;
    double var = 0.0;
    for (const auto& p : train) var += (p.features[i] - mean) * (p.features[i] - mean);
    const double sd = std::sqrt(var / n);
    model.feature_means[i] = mean;
    model.feature_stds[i] = sd > 1e-12 ? sd : 1.0;
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  rows.reserve(train.size());
  for (const auto& p : train) {
    rows.push_back(standardize(model, p.features));
    labels.push_back(p.label);
  }

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const LogLossResult g = log_loss_gradient(model.weights, model.bias, rows, labels, config.l2_lambda);
    if (!std::isfinite(g.loss)) throw NumericError("link scorer training diverged (non-finite loss)");
    result.log.push_back({epoch, g.loss});
    for (std::size_t i = 0; i < dim; ++i) model.weights[i] -= config.learning_rate * g.grad_weights[i];
    model.bias -= config.learning_rate * g.grad_bias;
  }
  result.log.push_back(
      {config.epochs, log_loss_gradient(model.weights, model.bias, rows, labels, config.l2_lambda).loss});

  const auto& eval_set = val.empty() ? train : val;
  std::vector<double> scores;
  std::vector<int> eval_labels;
  std::size_t correct = 0;
  for (const auto& p : eval_set) {
    const double prob = scorer_probability(model, p.features);
    scores.push_back(prob);
    eval_labels.push_back(p.label);
    if ((prob >= 0.5) == (p.label == 1)) ++correct;
  }
  result.validation_accuracy = static_cast<double>(correct) / static_cast<double>(eval_set.size());
  bool pos = false, neg = false;
  for (int l : eval_labels) (l == 1 ? pos : neg) = true;
  result.validation_auc = (pos && neg) ? roc_auc(scores, eval_labels) : 0.0;
  return result;
}

}  // namespace tubelink
