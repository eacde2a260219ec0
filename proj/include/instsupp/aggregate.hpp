#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "instsupp/errors.hpp"

namespace instsupp {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Column sums of per-utterance rows, accumulated in row order.
template <typename Derived>
VectorX<typename Derived::Scalar> sum_features(const Eigen::MatrixBase<Derived>& rows) {
  if (rows.rows() == 0) throw ValidationError("sum_features: session has no utterances");
  VectorX<typename Derived::Scalar> g = rows.row(0).transpose();
  for (Eigen::Index i = 1; i < rows.rows(); ++i) g += rows.row(i).transpose();
  return g;
}

/// Per-feature mean and population standard deviation of training
/// session vectors. Zero deviations are replaced by 1 and flagged in
/// `masked`, so such columns are centered only.
template <typename Scalar>
struct BasicStandardizer {
  VectorX<Scalar> mean;
  VectorX<Scalar> scale;
  Eigen::Array<bool, Eigen::Dynamic, 1> masked;
  Eigen::Index n_train = 0;

  Eigen::Index dimension() const { return mean.size(); }
};

using Standardizer = BasicStandardizer<double>;

/// `sessions` holds one session vector per row.
template <typename Derived>
BasicStandardizer<typename Derived::Scalar> fit_standardizer(
    const Eigen::MatrixBase<Derived>& sessions) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = sessions.rows();
  if (n < 2) throw ValidationError("fit_standardizer: need at least 2 training sessions");
  BasicStandardizer<Scalar> st;
  st.n_train = n;
  st.mean = sessions.colwise().sum().transpose() / static_cast<Scalar>(n);
  st.scale.resize(sessions.cols());
  st.masked.resize(sessions.cols());
  for (Eigen::Index j = 0; j < sessions.cols(); ++j) {
    const Scalar var =
        (sessions.col(j).array() - st.mean(j)).square().sum() / static_cast<Scalar>(n);
    const Scalar sd = std::sqrt(var);
    st.masked(j) = !(sd > Scalar(0));
    st.scale(j) = st.masked(j) ? Scalar(1) : sd;
  }
  return st;
}

template <typename Derived>
VectorX<typename Derived::Scalar> standardize(
    const Eigen::MatrixBase<Derived>& g,
    const BasicStandardizer<typename Derived::Scalar>& st) {
  if (g.size() != st.dimension())
    throw DimensionMismatch(
        fmt::format("standardize: vector has {} features, standardizer {}", g.size(),
                    st.dimension()));
  return ((g.derived().array() - st.mean.array()) / st.scale.array()).matrix();
}

/// Row-wise standardization of a session matrix.
template <typename Derived>
MatrixX<typename Derived::Scalar> standardize_rows(
    const Eigen::MatrixBase<Derived>& sessions,
    const BasicStandardizer<typename Derived::Scalar>& st) {
  if (sessions.cols() != st.dimension())
    throw DimensionMismatch(
        fmt::format("standardize: matrix has {} features, standardizer {}", sessions.cols(),
                    st.dimension()));
  return ((sessions.rowwise() - st.mean.transpose()).array().rowwise() /
          st.scale.transpose().array())
      .matrix();
}

/// Utterance-level features for one session together with their sum.
struct SessionFeatures {
  std::string session_id;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd per_utterance;
  Eigen::VectorXd g;

  Eigen::Index dimension() const { return static_cast<Eigen::Index>(feature_names.size()); }
};

SessionFeatures make_session_features(std::string session_id,
                                      std::vector<std::string> feature_names,
                                      Eigen::MatrixXd per_utterance);

/// Column-wise concatenation; `a` occupies the leading columns. A family
/// with no columns is the identity.
SessionFeatures concat(const SessionFeatures& a, const SessionFeatures& b);

}  // namespace instsupp
