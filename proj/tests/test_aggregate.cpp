#include <doctest.h>

#include <random>

#include "instsupp/aggregate.hpp"
#include "instsupp/errors.hpp"

using namespace instsupp;

TEST_CASE("session sums") {
  Eigen::MatrixXd rows(3, 2);
  rows << 1, 0, 0, 2, 1, 1;
  CHECK(sum_features(rows) == Eigen::Vector2d(2, 3));
  CHECK(sum_features(rows.topRows(1)) == Eigen::Vector2d(1, 0));
  CHECK_THROWS_AS(sum_features(Eigen::MatrixXd(0, 2)), ValidationError);

  // Works for integer count matrices too.
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts(2, 2);
  counts << 1, 2, 3, 4;
  CHECK(sum_features(counts)(1) == 6);
}

TEST_CASE("standardizer uses population statistics and masks constant columns") {
  Eigen::MatrixXd g(2, 1);
  g << 0, 2;
  auto st = fit_standardizer(g);
  CHECK(st.mean(0) == 1.0);
  CHECK(st.scale(0) == 1.0);
  CHECK_FALSE(st.masked(0));

  Eigen::MatrixXd c(3, 2);
  c << 5, -1, 5, 0, 5, 1;
  auto sc = fit_standardizer(c);
  CHECK(sc.masked(0));
  CHECK(sc.scale(0) == 1.0);
  CHECK(sc.mean(1) == 0.0);
  CHECK(standardize(Eigen::Vector2d(5, 0), sc).isZero());

  Eigen::VectorXd one(1);
  one << 3;
  BasicStandardizer<double> hand{Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 1.0),
                                 Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(1, false), 2};
  CHECK(standardize(one, hand)(0) == 2.0);
  CHECK_THROWS_AS(standardize(Eigen::Vector2d(1, 2), hand), DimensionMismatch);
  CHECK_THROWS_AS(fit_standardizer(Eigen::MatrixXd::Ones(1, 3)), ValidationError);
}

TEST_CASE("standardized training columns have mean 0 and sd 1") {
  std::mt19937_64 rng(11);
  std::gamma_distribution<double> gamma(2.0, 30.0);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::MatrixXd g(40, 12);
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = std::floor(gamma(rng));
    g.col(3).setConstant(7.0);
    auto st = fit_standardizer(g);
    auto z = standardize_rows(g, st);
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      double mean = 0, ss = 0;
      for (Eigen::Index i = 0; i < z.rows(); ++i) mean += z(i, j);
      mean /= static_cast<double>(z.rows());
      for (Eigen::Index i = 0; i < z.rows(); ++i) ss += (z(i, j) - mean) * (z(i, j) - mean);
      CHECK(std::abs(mean) < 1e-9);
      if (!st.masked(j)) CHECK(std::abs(std::sqrt(ss / static_cast<double>(z.rows())) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("templated scalar support") {
  Eigen::MatrixXf g(3, 1);
  g << 1.0f, 2.0f, 3.0f;
  auto st = fit_standardizer(g);
  static_assert(std::is_same_v<decltype(st), BasicStandardizer<float>>);
  CHECK(st.mean(0) == doctest::Approx(2.0f));
}

TEST_CASE("feature family concatenation") {
  Eigen::MatrixXd llm = Eigen::MatrixXd::Constant(2, 11, 0.5);
  Eigen::MatrixXd bow = Eigen::MatrixXd::Ones(2, 302);
  auto a = make_session_features("s", std::vector<std::string>(11, "l"), llm);
  auto b = make_session_features("s", std::vector<std::string>(302, "b"), bow);
  auto both = concat(a, b);
  CHECK(both.dimension() == 313);
  CHECK(both.per_utterance.rows() == 2);
  CHECK(both.g(0) == 1.0);
  CHECK(both.g(312) == 2.0);

  SessionFeatures empty;
  CHECK(concat(empty, b).g == b.g);
  CHECK(concat(a, empty).feature_names == a.feature_names);

  auto short_b = make_session_features("s", {"x"}, Eigen::MatrixXd::Ones(3, 1));
  CHECK_THROWS_AS(concat(a, short_b), DimensionMismatch);
}
