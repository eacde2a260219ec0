#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "instsupp/errors.hpp"

namespace instsupp::metrics {

namespace detail {

template <typename DA, typename DB>
void require_same_length(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b,
                         Eigen::Index min_size, const char* what) {
  if (a.size() != b.size())
    throw DimensionMismatch(fmt::format("{}: lengths {} and {}", what, a.size(), b.size()));
  if (a.size() < min_size)
    throw ValidationError(fmt::format("{}: need at least {} values", what, min_size));
}

}  // namespace detail

/// Pearson correlation; nullopt when either side has zero variance.
template <typename DA, typename DB>
std::optional<typename DA::Scalar> pearson(const Eigen::MatrixBase<DA>& a,
                                           const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  detail::require_same_length(a, b, 2, "pearson");
  const auto ca = (a.array() - a.mean()).eval();
  const auto cb = (b.array() - b.mean()).eval();
  const Scalar saa = ca.square().sum();
  const Scalar sbb = cb.square().sum();
  if (!(saa > 0) || !(sbb > 0)) return std::nullopt;
  const Scalar r = (ca * cb).sum() / std::sqrt(saa * sbb);
  return std::clamp(r, Scalar(-1), Scalar(1));
}

/// 1-based ranks, ties share the average of their positions.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> average_ranks(
    const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return v(i) < v(j); });
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ranks(n);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v(order[j + 1]) == v(order[i])) ++j;
    const Scalar avg = Scalar(i + j + 2) / Scalar(2);
    for (std::size_t k = i; k <= j; ++k) ranks(order[k]) = avg;
    i = j + 1;
  }
  return ranks;
}

template <typename DA, typename DB>
std::optional<typename DA::Scalar> spearman(const Eigen::MatrixBase<DA>& a,
                                            const Eigen::MatrixBase<DB>& b) {
  detail::require_same_length(a, b, 2, "spearman");
  return pearson(average_ranks(a), average_ranks(b));
}

template <typename DA, typename DB>
typename DA::Scalar rmse(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  detail::require_same_length(a, b, 1, "rmse");
  return std::sqrt((a - b).squaredNorm() / static_cast<typename DA::Scalar>(a.size()));
}

struct QwkResult {
  /// nullopt when expected disagreement is zero (both sides one category).
  std::optional<double> kappa;
  /// Predictions were constant and all mapped to the range midpoint.
  bool constant_prediction = false;
};

/// Rounds half up and clamps into [lo, hi].
inline int round_to_category(double x, int lo, int hi) {
  return std::clamp(static_cast<int>(std::floor(x + 0.5)), lo, hi);
}

/// Quadratic-weighted Cohen's kappa. Predictions are mapped affinely from
/// their own [min, max] onto [lo, hi] and rounded; truths are rounded.
template <typename DA, typename DB>
QwkResult qwk(const Eigen::MatrixBase<DA>& pred, const Eigen::MatrixBase<DB>& truth, int lo,
              int hi) {
  detail::require_same_length(pred, truth, 2, "qwk");
  if (hi <= lo) throw ValidationError("qwk: empty category range");
  const Eigen::Index n = pred.size();
  const int k = hi - lo + 1;
  QwkResult out;

  const double pmin = pred.minCoeff();
  const double pmax = pred.maxCoeff();
  std::vector<int> p(static_cast<std::size_t>(n));
  std::vector<int> t(static_cast<std::size_t>(n));
  out.constant_prediction = !(pmax > pmin);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mapped = out.constant_prediction
                              ? 0.5 * (lo + hi)
                              : lo + (pred(i) - pmin) / (pmax - pmin) * (hi - lo);
    p[static_cast<std::size_t>(i)] = round_to_category(mapped, lo, hi) - lo;
    t[static_cast<std::size_t>(i)] = round_to_category(truth(i), lo, hi) - lo;
  }

  Eigen::MatrixXd observed = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd hist_p = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd hist_t = Eigen::VectorXd::Zero(k);
  for (std::size_t i = 0; i < p.size(); ++i) {
    observed(p[i], t[i]) += 1.0;
    hist_p(p[i]) += 1.0;
    hist_t(t[i]) += 1.0;
  }
  const Eigen::MatrixXd expected = hist_p * hist_t.transpose() / static_cast<double>(n);
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double w = double((i - j) * (i - j)) / double((k - 1) * (k - 1));
      num += w * observed(i, j);
      den += w * expected(i, j);
    }
  if (den > 0) out.kappa = 1.0 - num / den;
  return out;
}

/// Mean and standard error (sample sd / sqrt(count)) of defined values.
struct Summary {
  std::optional<double> mean;
  std::optional<double> se;
  std::size_t n_defined = 0;
  std::size_t n_undefined = 0;
};

Summary summarize(const std::vector<std::optional<double>>& values);

}  // namespace instsupp::metrics
