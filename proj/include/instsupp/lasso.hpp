#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "instsupp/aggregate.hpp"

namespace instsupp {

template <typename Scalar>
struct LassoOptions {
  Scalar lambda = Scalar(0.1);
  bool non_negative = false;
  /// Stop when no coordinate (intercept included) moves by this much in a sweep.
  Scalar tolerance = Scalar(1e-8);
  int max_sweeps = 10000;
};

template <typename Scalar>
struct LassoFit {
  VectorX<Scalar> w;
  Scalar b = 0;
  /// Objective at the start, then after every sweep.
  std::vector<Scalar> objective_trace;
  int sweeps = 0;
  bool converged = false;
};

template <typename Scalar>
Scalar soft_threshold(Scalar rho, Scalar lambda) {
  if (rho > lambda) return rho - lambda;
  if (rho < -lambda) return rho + lambda;
  return Scalar(0);
}

/// (1/2N) * ||y - Xw - b||^2 + lambda * ||w||_1
template <typename DerivedX, typename DerivedY, typename DerivedW>
typename DerivedX::Scalar lasso_objective(const Eigen::MatrixBase<DerivedX>& X,
                                          const Eigen::MatrixBase<DerivedY>& y,
                                          const Eigen::MatrixBase<DerivedW>& w,
                                          typename DerivedX::Scalar b,
                                          typename DerivedX::Scalar lambda) {
  using Scalar = typename DerivedX::Scalar;
  const auto n = static_cast<Scalar>(X.rows());
  const VectorX<Scalar> r = (y - X * w).array() - b;
  return r.squaredNorm() / (Scalar(2) * n) + lambda * w.template lpNorm<1>();
}

/// L1-regularized least squares with an unpenalized intercept, solved by
/// cyclic coordinate descent from w = 0. With `non_negative` every weight
/// is clamped at zero from below.
template <typename DerivedX, typename DerivedY>
LassoFit<typename DerivedX::Scalar> fit_lasso(
    const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& y,
    const LassoOptions<typename DerivedX::Scalar>& options = {}) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (y.size() != n)
    throw DimensionMismatch(fmt::format("fit_lasso: {} rows but {} targets", n, y.size()));
  if (n < 2) throw ValidationError("fit_lasso: need at least 2 samples");
  if (!X.allFinite() || !y.allFinite())
    throw ValidationError("fit_lasso: non-finite input");
  if (!(options.lambda >= 0)) throw ValidationError("fit_lasso: lambda must be >= 0");

  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  const VectorX<Scalar> z = X.colwise().squaredNorm().transpose() * inv_n;

  LassoFit<Scalar> fit;
  fit.w = VectorX<Scalar>::Zero(d);
  fit.b = y.mean();
  VectorX<Scalar> r = y.array() - fit.b;
  fit.objective_trace.push_back(lasso_objective(X, y, fit.w, fit.b, options.lambda));

  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    Scalar max_change = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const Scalar old = fit.w(j);
      Scalar updated = 0;
      if (z(j) > 0) {
        const Scalar rho = X.col(j).dot(r) * inv_n + z(j) * old;
        updated = options.non_negative ? std::max(Scalar(0), (rho - options.lambda) / z(j))
                                       : soft_threshold(rho, options.lambda) / z(j);
      }
      const Scalar delta = updated - old;
      if (delta != 0) {
        r -= delta * X.col(j);
        fit.w(j) = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    const Scalar db = r.mean();
    if (db != 0) {
      fit.b += db;
      r.array() -= db;
      max_change = std::max(max_change, std::abs(db));
    }
    fit.sweeps = sweep + 1;
    fit.objective_trace.push_back(lasso_objective(X, y, fit.w, fit.b, options.lambda));
    if (max_change < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

/// A trained session-score regressor: standardizer plus sparse weights.
struct RegressionModel {
  std::vector<std::string> feature_names;
  Eigen::VectorXd w;
  double b = 0.0;
  double lambda = 0.1;
  bool non_negative = false;
  Standardizer standardizer;
  std::vector<double> objective_trace;
  int sweeps = 0;
  bool converged = false;
  // Provenance, copied into the model file.
  std::string protocol;
  std::string feature_mode;
  std::string dimension;

  Eigen::Index dimension_size() const { return w.size(); }
};

/// Fits the standardizer on `sessions` (one raw session vector per row),
/// then the lasso on the standardized rows.
RegressionModel train_model(const Eigen::MatrixXd& sessions, const Eigen::VectorXd& targets,
                            std::vector<std::string> feature_names,
                            const LassoOptions<double>& options = {});

double predict(const RegressionModel& model, const Eigen::VectorXd& g_raw);

/// w / s with the masked scale, i.e. the weight applied to raw counts.
Eigen::VectorXd standardized_weights(const RegressionModel& model);

nlohmann::json model_to_json(const RegressionModel& model);
RegressionModel model_from_json(const nlohmann::json& doc);
void save_model(const RegressionModel& model, const std::filesystem::path& path);
RegressionModel load_model(const std::filesystem::path& path);

}  // namespace instsupp
