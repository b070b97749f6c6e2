#pragma once

// Straightforward reference implementations used only by the tests. Each one
// is written from the definition with plain loops and shares no code with the
// library it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, rows x cols

// --- boxes ---------------------------------------------------------------

struct Box {
  double x, y, w, h;
};

inline double iou(const Box& a, const Box& b) {
  double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  double inter = ix * iy;
  double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

// --- embedding / triplet loss -------------------------------------------

inline Vec embed(const Mat& W, const Vec& b, const Vec& x) {
  Vec y(W.size());
  for (std::size_t r = 0; r < W.size(); ++r) {
    double s = b[r];
    for (std::size_t c = 0; c < x.size(); ++c) s += W[r][c] * x[c];
    y[r] = s;
  }
  double n = 0;
  for (double v : y) n += v * v;
  n = std::sqrt(n);
  for (double& v : y) v /= n;
  return y;
}

inline double sqdist(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

struct TripletRaw {
  Vec a, p, n;
};

inline double triplet_loss(const Mat& W, const Vec& b, const std::vector<TripletRaw>& batch,
                           double margin) {
  double total = 0;
  for (const auto& t : batch) {
    Vec fa = embed(W, b, t.a), fp = embed(W, b, t.p), fn = embed(W, b, t.n);
    double h = sqdist(fa, fp) - sqdist(fa, fn) + margin;
    if (h > 0) total += h;
  }
  return total;
}

// Hinge argument per triplet, for skipping points near the kink.
inline Vec triplet_margins(const Mat& W, const Vec& b, const std::vector<TripletRaw>& batch,
                           double margin) {
  Vec out;
  for (const auto& t : batch) {
    Vec fa = embed(W, b, t.a), fp = embed(W, b, t.p), fn = embed(W, b, t.n);
    out.push_back(sqdist(fa, fp) - sqdist(fa, fn) + margin);
  }
  return out;
}

// --- logistic regression -------------------------------------------------

struct LogLoss {
  double loss;
  Vec gw;
  double gb;
};

// Mean negative log-likelihood + l2/2 |w|^2, written via log1p(exp(.)).
inline double log_loss(const Vec& w, double b, const Mat& X, const std::vector<int>& y, double l2) {
  double s = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    double z = b;
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * X[i][j];
    // -log sigmoid(z) for y=1, -log(1-sigmoid(z)) for y=0
    double m = y[i] ? -z : z;
    s += m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
  }
  double reg = 0;
  for (double v : w) reg += v * v;
  return s / X.size() + 0.5 * l2 * reg;
}

inline LogLoss log_loss_gradient(const Vec& w, double b, const Mat& X, const std::vector<int>& y,
                                 double l2) {
  LogLoss r{log_loss(w, b, X, y, l2), Vec(w.size(), 0.0), 0.0};
  for (std::size_t i = 0; i < X.size(); ++i) {
    double z = b;
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * X[i][j];
    double p = 1.0 / (1.0 + std::exp(-z));
    double e = p - y[i];
    for (std::size_t j = 0; j < w.size(); ++j) r.gw[j] += e * X[i][j];
    r.gb += e;
  }
  for (std::size_t j = 0; j < w.size(); ++j) r.gw[j] = r.gw[j] / X.size() + l2 * w[j];
  r.gb /= X.size();
  return r;
}

// --- smoothing -----------------------------------------------------------

inline Vec gaussian_kernel(double sigma) {
  if (sigma == 0) return {1.0};
  int r = static_cast<int>(std::ceil(4 * sigma));
  Vec k;
  double s = 0;
  for (int i = -r; i <= r; ++i) {
    k.push_back(std::exp(-(i * i) / (2 * sigma * sigma)));
    s += k.back();
  }
  for (double& v : k) v /= s;
  return k;
}

// Direct convolution, indices clamped into the series (replicate padding).
inline Vec smooth(const Vec& x, double sigma) {
  Vec k = gaussian_kernel(sigma);
  int r = static_cast<int>(k.size() / 2);
  int n = static_cast<int>(x.size());
  Vec out(x.size(), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = -r; j <= r; ++j) out[i] += k[j + r] * x[std::clamp(i + j, 0, n - 1)];
  return out;
}

// --- rescoring -----------------------------------------------------------

inline Vec mean(const Mat& rows) {
  Vec m(rows.front().size(), 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < r.size(); ++j) m[j] += r[j];
  for (double& v : m) v /= rows.size();
  return m;
}

// --- greedy matcher ------------------------------------------------------

// Sort every entry by (score desc, row asc, col asc) and accept in order when
// both row and column are still free.
inline std::set<std::pair<std::size_t, std::size_t>> greedy(const Mat& m, double thr) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> entries;
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m[r].size(); ++c)
      if (m[r][c] >= thr) entries.emplace_back(m[r][c], r, c);
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::set<std::size_t> rows, cols;
  std::set<std::pair<std::size_t, std::size_t>> links;
  for (auto& [s, r, c] : entries) {
    if (rows.count(r) || cols.count(c)) continue;
    rows.insert(r);
    cols.insert(c);
    links.emplace(r, c);
  }
  return links;
}

// --- average precision ---------------------------------------------------

struct ApDet {
  int frame;
  Box box;
  double score;
};
struct ApGt {
  int frame;
  Box box;
};

// Stable sort by score, greedy best-IoU matching, then AP as the mean over
// GT of the best precision reached at any rank with at least that recall.
inline double average_precision(const std::vector<ApDet>& dets, const std::vector<ApGt>& gt,
                                double thr) {
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<bool> used(gt.size(), false);
  std::vector<int> tp;
  for (std::size_t i : order) {
    int best = -1;
    double best_iou = -1;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (used[g] || gt[g].frame != dets[i].frame) continue;
      double v = iou(dets[i].box, gt[g].box);
      if (v >= thr && v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) used[best] = true;
    tp.push_back(best >= 0);
  }
  std::size_t n = tp.size();
  Vec prec(n), rec(n);
  int cum = 0;
  for (std::size_t k = 0; k < n; ++k) {
    cum += tp[k];
    prec[k] = static_cast<double>(cum) / (k + 1);
    rec[k] = static_cast<double>(cum) / gt.size();
  }
  double ap = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!tp[k]) continue;
    double best = 0;
    for (std::size_t j = k; j < n; ++j) best = std::max(best, prec[j]);
    ap += best / gt.size();
  }
  return ap;
}

// --- finite differences --------------------------------------------------

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

inline double relative_error(double a, double b) {
  double d = std::abs(a - b);
  double s = std::max({std::abs(a), std::abs(b), 1e-8});
  return d / s;
}

}  // namespace oracle
