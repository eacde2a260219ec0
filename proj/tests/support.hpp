// Shared test helpers and brute-force reference implementations. The oracles
// here are deliberately written differently from the library code they check
// (plain loops, quadratic algorithms, textbook formulas).
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "instsupp/corpus.hpp"

namespace testing {

// --- files and processes ---------------------------------------------------

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& path);
void spit(const std::filesystem::path& path, const std::string& content);

struct CliResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

/// Runs the library CLI entry point in-process from `cwd`.
CliResult run_cli(const std::filesystem::path& cwd, const std::vector<std::string>& args);

/// Every regular file under `dir`, keyed by relative path, with contents.
std::map<std::string, std::string> snapshot(const std::filesystem::path& dir);

// --- corpus builders -------------------------------------------------------

instsupp::Session make_session(const std::string& id, const std::string& teacher,
                               const std::vector<std::string>& texts);

// --- oracles ---------------------------------------------------------------

std::vector<std::string> oracle_tokens(const std::string& text);

/// Top-K admissible n-grams by total count, ties broken lexicographically.
std::vector<std::pair<std::string, std::int64_t>> oracle_vocabulary(
    const std::vector<std::string>& texts, std::size_t k, const std::vector<int>& sizes,
    const std::vector<std::string>& stopwords);

/// Number of (possibly overlapping) occurrences of `needle` in `hay`.
std::int64_t oracle_count_substring(const std::string& hay, const std::string& needle);

/// Minimizes (1/2N)||y - Xw - b||^2 + lambda ||w||_1 by accelerated proximal
/// gradient on centered data. Returns (w, b).
std::pair<Eigen::VectorXd, double> oracle_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                                double lambda, bool non_negative,
                                                int iterations = 20000);

/// Largest violation of the lasso optimality conditions at (w, b).
double kkt_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    double b, double lambda, bool non_negative);

std::optional<double> oracle_pearson(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> oracle_ranks(const std::vector<double>& v);
std::optional<double> oracle_spearman(const std::vector<double>& a, const std::vector<double>& b);
double oracle_rmse(const std::vector<double>& a, const std::vector<double>& b);
/// Quadratic kappa via the pairwise identity
/// 1 - sum_i (p_i - t_i)^2 / ((1/n) sum_i sum_j (p_i - t_j)^2).
std::optional<double> oracle_qwk(const std::vector<double>& pred, const std::vector<double>& truth,
                                 int lo, int hi);

std::vector<double> to_std(const Eigen::VectorXd& v);
Eigen::VectorXd to_eigen(const std::vector<double>& v);

}  // namespace testing
