#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "instsupp/cli.hpp"

namespace testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("instsupp-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

CliResult run_cli(const fs::path& cwd, const std::vector<std::string>& args) {
  // The CLI resolves relative paths against the process working directory.
  const auto previous = fs::current_path();
  fs::current_path(cwd);
  std::vector<const char*> argv{"instsupp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  try {
    r.exit_code = instsupp::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  } catch (...) {
    fs::current_path(previous);
    throw;
  }
  fs::current_path(previous);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file())
      files[fs::relative(entry.path(), dir).generic_string()] = slurp(entry.path());
  return files;
}

instsupp::Session make_session(const std::string& id, const std::string& teacher,
                               const std::vector<std::string>& texts) {
  instsupp::Session s;
  s.session_id = id;
  s.teacher_id = teacher;
  for (std::size_t i = 0; i < texts.size(); ++i)
    s.utterances.push_back({i, 5.0 * static_cast<double>(i), 5.0 * static_cast<double>(i) + 4.0,
                            texts[i]});
  return s;
}

std::vector<std::string> oracle_tokens(const std::string& text) {
  std::string cleaned;
  for (char c : text) {
    if (c == ',' || c == '.') continue;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') c = ' ';
    cleaned += c;
  }
  std::istringstream in(cleaned);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

std::vector<std::pair<std::string, std::int64_t>> oracle_vocabulary(
    const std::vector<std::string>& texts, std::size_t k, const std::vector<int>& sizes,
    const std::vector<std::string>& stopwords) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& text : texts) {
    const auto tokens = oracle_tokens(text);
    for (int n : sizes)
      for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
        std::string g;
        for (int j = 0; j < n; ++j) g += (j ? " " : "") + tokens[i + static_cast<std::size_t>(j)];
        counts[g] += 1;
      }
  }
  std::vector<std::pair<std::string, std::int64_t>> all;
  for (const auto& [g, c] : counts)
    if (std::find(stopwords.begin(), stopwords.end(), g) == stopwords.end()) all.emplace_back(g, c);
  // Selection by repeated maximum, O(K * candidates).
  std::vector<std::pair<std::string, std::int64_t>> out;
  std::vector<bool> taken(all.size(), false);
  for (std::size_t r = 0; r < k && r < all.size(); ++r) {
    std::size_t best = all.size();
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (taken[i]) continue;
      if (best == all.size() || all[i].second > all[best].second ||
          (all[i].second == all[best].second && all[i].first < all[best].first))
        best = i;
    }
    taken[best] = true;
    out.push_back(all[best]);
  }
  return out;
}

std::int64_t oracle_count_substring(const std::string& hay, const std::string& needle) {
  std::int64_t n = 0;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i)
    if (hay.compare(i, needle.size(), needle) == 0) ++n;
  return n;
}

std::pair<Eigen::VectorXd, double> oracle_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                                double lambda, bool non_negative, int iterations) {
  const double n = static_cast<double>(X.rows());
  const Eigen::RowVectorXd xbar = X.colwise().mean();
  const double ybar = y.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - xbar;
  const Eigen::VectorXd yc = y.array() - ybar;
  // Step 1/L with L the largest eigenvalue of Xc'Xc / n.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Xc.transpose() * Xc / n);
  const double L = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(X.cols());
  Eigen::VectorXd v = w;
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd grad = Xc.transpose() * (Xc * v - yc) / n;
    Eigen::VectorXd next = v - grad / L;
    for (Eigen::Index j = 0; j < next.size(); ++j) {
      const double a = next(j);
      const double shrunk = std::copysign(std::max(std::abs(a) - lambda / L, 0.0), a);
      next(j) = non_negative ? std::max(a - lambda / L, 0.0) : shrunk;
    }
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    v = next + ((t - 1.0) / t_next) * (next - w);
    w = next;
    t = t_next;
  }
  return {w, ybar - xbar.dot(w)};
}

double kkt_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    double b, double lambda, bool non_negative) {
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd r = (y - X * w).array() - b;
  double worst = std::abs(r.mean());  // intercept stationarity
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double c = X.col(j).dot(r) / n;
    double v = 0.0;
    if (non_negative) {
      if (w(j) < 0) v = -w(j) + 1.0;
      else if (w(j) > 0) v = std::abs(c - lambda);
      else v = std::max(0.0, c - lambda);
    } else {
      if (w(j) != 0) v = std::abs(c - lambda * (w(j) > 0 ? 1.0 : -1.0));
      else v = std::max(0.0, std::abs(c) - lambda);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

std::optional<double> oracle_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  // Two-pass textbook form with explicit means.
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return std::nullopt;
  return sab / std::sqrt(saa) / std::sqrt(sbb);
}

std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double below = 0, equal = 0;
    for (double x : v) {
      if (x < v[i]) below += 1;
      if (x == v[i]) equal += 1;
    }
    ranks[i] = below + (equal + 1) / 2;
  }
  return ranks;
}

std::optional<double> oracle_spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return oracle_pearson(oracle_ranks(a), oracle_ranks(b));
}

double oracle_rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

std::optional<double> oracle_qwk(const std::vector<double>& pred, const std::vector<double>& truth,
                                 int lo, int hi) {
  const double pmin = *std::min_element(pred.begin(), pred.end());
  const double pmax = *std::max_element(pred.begin(), pred.end());
  auto to_cat = [&](double x) {
    double r = std::floor(x + 0.5);
    return std::min<double>(hi, std::max<double>(lo, r));
  };
  std::vector<double> p, t;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double mapped =
        pmax > pmin ? lo + (hi - lo) * ((pred[i] - pmin) / (pmax - pmin)) : (lo + hi) / 2.0;
    p.push_back(to_cat(mapped));
    t.push_back(to_cat(truth[i]));
  }
  const double n = static_cast<double>(p.size());
  double observed = 0, expected = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    observed += (p[i] - t[i]) * (p[i] - t[i]);
    for (std::size_t j = 0; j < t.size(); ++j) expected += (p[i] - t[j]) * (p[i] - t[j]);
  }
  expected /= n;
  if (expected == 0) return std::nullopt;
  return 1.0 - observed / expected;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace testing
