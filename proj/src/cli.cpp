#include "instsupp/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "instsupp/bow.hpp"
#include "instsupp/config.hpp"
#include "instsupp/corpus.hpp"
#include "instsupp/csv.hpp"
#include "instsupp/errors.hpp"
#include "instsupp/eval.hpp"
#include "instsupp/explain.hpp"
#include "instsupp/features.hpp"
#include "instsupp/hash.hpp"
#include "instsupp/lasso.hpp"
#include "instsupp/llm.hpp"
#include "instsupp/render.hpp"
#include "instsupp/synth.hpp"

namespace instsupp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("missing input file '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Outputs are staged in memory and written together once every step has
/// succeeded, each through a temporary file and rename.
class OutputSet {
 public:
  void add(fs::path path, std::string content) {
    files_.emplace_back(std::move(path), std::move(content));
  }
  void commit(std::ostream& out) const {
    for (const auto& [path, content] : files_) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      auto tmp = path;
      tmp += ".tmp";
      {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw Error(fmt::format("cannot write '{}'", tmp.string()));
        f << content;
      }
      fs::rename(tmp, path);
      out << "wrote " << path.string() << "\n";
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

struct Overrides {
  std::optional<std::string> workdir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> protocol;
  std::optional<std::string> feature_mode;
  std::optional<double> lambda;
  bool non_negative = false;
  std::optional<std::string> llm_backend;
  std::optional<std::string> llm_mode;
  std::optional<int> llm_context;
  std::optional<std::string> vocab_scope;
  std::optional<std::size_t> vocab_size;
  std::optional<int> folds;
  std::optional<std::string> transcripts;
  std::optional<std::string> labels;
};

struct Context {
  RunConfig config;
  fs::path workdir() const { return config.paths.workdir; }
  fs::path corpus_path() const { return workdir() / "corpus.json"; }
  fs::path vocab_path() const { return workdir() / "vocab.tsv"; }
  std::string mode_dir() const {
    std::string m = config.feature_mode;
    for (char& c : m)
      if (c == ':') c = '-';
    return m;
  }
  fs::path features_dir() const { return workdir() / "features" / mode_dir(); }
  fs::path model_path(Dimension d) const {
    return workdir() / "models" / mode_dir() / (to_string(d) + ".json");
  }
};

Context make_context(const std::string& config_path, const Overrides& o) {
  Context ctx;
  if (!config_path.empty()) ctx.config = load_config(config_path);
  auto& c = ctx.config;
  if (o.workdir) c.paths.workdir = *o.workdir;
  if (o.seed) c.cv.seed = *o.seed;
  std::vector<std::string> problems;
  if (o.protocol) {
    try {
      c.protocol = parse_protocol(*o.protocol);
    } catch (const ValidationError& e) {
      problems.push_back(fmt::format("--protocol: {}", e.what()));
    }
  }
  if (o.feature_mode) c.feature_mode = *o.feature_mode;
  if (o.lambda) c.lasso.lambda = *o.lambda;
  if (o.non_negative) c.lasso.non_negative = true;
  if (o.llm_backend) c.llm.backend = *o.llm_backend;
  if (o.llm_mode) c.llm.mode = *o.llm_mode;
  if (o.llm_context) c.llm.context = *o.llm_context;
  if (o.vocab_scope) c.bow.vocab_scope = *o.vocab_scope;
  if (o.vocab_size) c.bow.K = *o.vocab_size;
  if (o.folds) c.cv.k = *o.folds;
  if (o.transcripts) c.paths.transcripts = *o.transcripts;
  if (o.labels) c.paths.labels = *o.labels;
  if (!problems.empty()) throw ConfigError(problems);
  validate(c);
  return ctx;
}

Corpus load_corpus_checked(const Context& ctx, bool with_labels) {
  if (!fs::exists(ctx.corpus_path()))
    throw Error(fmt::format("missing '{}'; run `instsupp ingest` first", ctx.corpus_path().string()));
  Corpus corpus = load_corpus(ctx.corpus_path());
  if (with_labels) {
    if (ctx.config.paths.labels.empty()) throw Error("paths.labels is not set");
    attach_labels(corpus, load_labels(ctx.config.paths.labels));
  }
  return corpus;
}

std::vector<Dimension> dimensions_from(const std::string& token) {
  if (token == "all") return {std::begin(kAllDimensions), std::end(kAllDimensions)};
  return {parse_dimension(token)};
}

/// LLM rows for every session, reusing and extending the feature cache.
LlmFeatureTable llm_table(const Context& ctx, const Corpus& corpus, std::ostream& err) {
  auto backend = make_backend(ctx.config);
  const auto options = featurize_options(ctx.config);
  const std::string key = Fnv1a()
                              .field(backend->identity())
                              .field(to_string(corpus.protocol))
                              .field(llm::to_string(options.mode))
                              .field(std::to_string(options.context))
                              .field(corpus_to_json(corpus).dump())
                              .hex();
  const fs::path cache_path = ctx.workdir() / "cache" / ("llm-" + key + ".csv");
  fs::create_directories(cache_path.parent_path());
  auto cache = llm::FeatureCache::load(cache_path);
  const auto before = cache.size();
  try {
    auto table = compute_llm_table(*backend, corpus, options, &cache);
    if (cache.size() != before) cache.save(cache_path);
    return table;
  } catch (...) {
    if (cache.size() != before) {
      cache.save(cache_path);
      err << "saved " << cache.size() << " cached LLM answers to " << cache_path.string()
          << " before aborting\n";
    }
    throw;
  }
}

struct FeatureSources {
  std::optional<LlmFeatureTable> llm;
  std::optional<bow::Vocabulary> vocab;
};

/// Feature config with its LLM table and corpus vocabulary attached.
FeatureConfig resolved_features(const Context& ctx, const Corpus& corpus, FeatureSources& src,
                                bool need_saved_vocab, std::ostream& err) {
  auto fc = feature_config(ctx.config);
  if (fc.uses_llm()) {
    src.llm = llm_table(ctx, corpus, err);
    fc.llm = &*src.llm;
  }
  if (fc.uses_bow() && (need_saved_vocab || fc.vocab_scope == VocabScope::Corpus)) {
    if (need_saved_vocab) {
      if (!fs::exists(ctx.vocab_path()))
        throw Error(fmt::format("missing '{}'; run `instsupp build-vocab` first",
                                ctx.vocab_path().string()));
      src.vocab = bow::Vocabulary::load(ctx.vocab_path());
    } else {
      bow::VocabularyOptions opts;
      opts.size = ctx.config.bow.K;
      opts.source = "corpus";
      src.vocab = bow::build_vocabulary(corpus, opts);
    }
    fc.corpus_vocab = &*src.vocab;
    fc.vocab_scope = VocabScope::Corpus;
  }
  return fc;
}

std::string utterance_csv(const std::vector<SessionFeatures>& all) {
  std::string out;
  csv::Row header{"session_id", "utterance_index"};
  if (!all.empty())
    header.insert(header.end(), all.front().feature_names.begin(), all.front().feature_names.end());
  out += csv::format_row(header);
  for (const auto& f : all)
    for (Eigen::Index i = 0; i < f.per_utterance.rows(); ++i) {
      csv::Row row{f.session_id, std::to_string(i)};
      for (Eigen::Index j = 0; j < f.per_utterance.cols(); ++j)
        row.push_back(csv::format_double(f.per_utterance(i, j)));
      out += csv::format_row(row);
    }
  return out;
}

std::string session_csv(const std::vector<SessionFeatures>& all) {
  std::string out;
  csv::Row header{"session_id"};
  if (!all.empty())
    header.insert(header.end(), all.front().feature_names.begin(), all.front().feature_names.end());
  out += csv::format_row(header);
  for (const auto& f : all) {
    csv::Row row{f.session_id};
    for (Eigen::Index j = 0; j < f.g.size(); ++j) row.push_back(csv::format_double(f.g(j)));
    out += csv::format_row(row);
  }
  return out;
}

/// Reads features/<mode>/utterances.csv back into per-session features.
std::map<std::string, SessionFeatures> read_utterance_features(const Context& ctx) {
  const auto path = ctx.features_dir() / "utterances.csv";
  if (!fs::exists(path))
    throw Error(fmt::format("missing '{}'; run `instsupp featurize` first", path.string()));
  auto rows = csv::parse(read_text(path));
  if (rows.empty() || rows[0].size() < 2) throw ValidationError(path.string() + ": no header");
  std::vector<std::string> names(rows[0].begin() + 2, rows[0].end());
  const auto d = static_cast<Eigen::Index>(names.size());

  std::map<std::string, std::vector<std::vector<double>>> grouped;
  std::vector<std::string> order;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (static_cast<Eigen::Index>(row.size()) != d + 2)
      throw ValidationError(fmt::format("{}: line {} has {} fields", path.string(), r + 1, row.size()));
    if (!grouped.count(row[0])) order.push_back(row[0]);
    std::vector<double> values;
    for (std::size_t j = 2; j < row.size(); ++j) values.push_back(csv::parse_double(row[j]));
    grouped[row[0]].push_back(std::move(values));
  }
  std::map<std::string, SessionFeatures> out;
  for (const auto& id : order) {
    const auto& vals = grouped[id];
    Eigen::MatrixXd m(static_cast<Eigen::Index>(vals.size()), d);
    for (std::size_t i = 0; i < vals.size(); ++i)
      for (Eigen::Index j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), j) = vals[i][static_cast<std::size_t>(j)];
    out.emplace(id, make_session_features(id, names, std::move(m)));
  }
  return out;
}

std::pair<std::vector<std::string>, std::map<std::string, Eigen::VectorXd>> read_session_features(
    const Context& ctx) {
  const auto path = ctx.features_dir() / "sessions.csv";
  if (!fs::exists(path))
    throw Error(fmt::format("missing '{}'; run `instsupp featurize` first", path.string()));
  auto rows = csv::parse(read_text(path));
  if (rows.empty()) throw ValidationError(path.string() + ": no header");
  std::vector<std::string> names(rows[0].begin() + 1, rows[0].end());
  std::map<std::string, Eigen::VectorXd> g;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != names.size() + 1)
      throw ValidationError(fmt::format("{}: line {} has {} fields", path.string(), r + 1, row.size()));
    Eigen::VectorXd v(static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j)
      v(static_cast<Eigen::Index>(j)) = csv::parse_double(row[j + 1]);
    g.emplace(row[0], std::move(v));
  }
  return {std::move(names), std::move(g)};
}

RegressionModel load_model_checked(const Context& ctx, Dimension d) {
  const auto path = ctx.model_path(d);
  if (!fs::exists(path))
    throw Error(fmt::format("missing '{}'; run `instsupp train` first", path.string()));
  return load_model(path);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_ingest(const Context& ctx, std::ostream& out, std::ostream& err) {
  const auto& manifest_path = ctx.config.paths.transcripts;
  if (manifest_path.empty()) throw Error("paths.transcripts is not set");
  auto rows = csv::parse(read_text(manifest_path));
  if (rows.empty() || rows[0] != csv::Row{"session_id", "teacher_id", "file"})
    throw ValidationError(manifest_path.string() + ": header must be session_id,teacher_id,file");
  const auto base = manifest_path.parent_path();

  Corpus corpus;
  corpus.protocol = ctx.config.protocol;
  std::vector<std::string> warnings;
  std::size_t excluded = 0;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 3)
      throw ValidationError(fmt::format("{}: line {} malformed", manifest_path.string(), r + 1));
    if (row[1].empty())
      throw ValidationError(fmt::format("{}: session {} has no teacher_id", manifest_path.string(), row[0]));
    if (!seen.insert(row[0]).second)
      throw ValidationError(fmt::format("duplicate session_id '{}'", row[0]));
    fs::path file = row[2];
    if (file.is_relative()) file = base / file;
    try {
      corpus.sessions.push_back(import_whisper(file, row[0], row[1], {}, &warnings));
    } catch (const EmptySession& e) {
      ++excluded;
      err << "excluded: " << e.what() << "\n";
    }
  }
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  if (corpus.sessions.empty()) throw Error("no session with detected speech");

  OutputSet outputs;
  outputs.add(ctx.corpus_path(), corpus_to_json(corpus).dump(1) + "\n");
  outputs.commit(out);
  out << fmt::format("ingested {} sessions ({} excluded without speech)\n",
                     corpus.sessions.size(), excluded);
  return 0;
}

int cmd_build_vocab(const Context& ctx, std::ostream& out) {
  auto corpus = load_corpus_checked(ctx, false);
  bow::VocabularyOptions opts;
  opts.size = ctx.config.bow.K;
  opts.source = ctx.corpus_path().string();
  auto vocab = bow::build_vocabulary(corpus, opts);
  OutputSet outputs;
  outputs.add(ctx.vocab_path(), vocab.to_tsv());
  outputs.commit(out);
  out << fmt::format("vocabulary: {} n-grams + 2 pseudo-tokens\n", vocab.entries().size());
  return 0;
}

int cmd_featurize(const Context& ctx, std::ostream& out, std::ostream& err) {
  auto corpus = load_corpus_checked(ctx, false);
  FeatureSources src;
  auto fc = resolved_features(ctx, corpus, src, true, err);
  std::vector<const Session*> all;
  for (const auto& s : corpus.sessions) all.push_back(&s);
  auto featurizer = fit_featurizer(fc, all);
  std::vector<SessionFeatures> features;
  for (const auto& s : corpus.sessions) features.push_back(featurizer(s));

  OutputSet outputs;
  outputs.add(ctx.features_dir() / "utterances.csv", utterance_csv(features));
  outputs.add(ctx.features_dir() / "sessions.csv", session_csv(features));
  outputs.commit(out);
  out << fmt::format("featurized {} sessions x {} features ({})\n", features.size(),
                     featurizer.feature_names().size(), ctx.config.feature_mode);
  return 0;
}

int cmd_train(const Context& ctx, const std::string& dims, std::ostream& out) {
  auto corpus = load_corpus_checked(ctx, true);
  auto [names, g] = read_session_features(ctx);
  OutputSet outputs;
  for (auto d : dimensions_from(dims)) {
    std::vector<const Session*> used;
    std::size_t excluded = 0;
    for (const auto& s : corpus.sessions) {
      if (!try_mean_target(s, d)) {
        ++excluded;
        continue;
      }
      if (!g.count(s.session_id))
        throw Error(fmt::format("no features for session {}; re-run featurize", s.session_id));
      used.push_back(&s);
    }
    Eigen::MatrixXd G(static_cast<Eigen::Index>(used.size()), static_cast<Eigen::Index>(names.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(used.size()));
    for (std::size_t i = 0; i < used.size(); ++i) {
      G.row(static_cast<Eigen::Index>(i)) = g.at(used[i]->session_id).transpose();
      y(static_cast<Eigen::Index>(i)) = mean_target(*used[i], d);
    }
    LassoOptions<double> lo;
    lo.lambda = ctx.config.lasso.lambda;
    lo.non_negative = ctx.config.lasso.non_negative;
    auto model = train_model(G, y, names, lo);
    model.protocol = to_string(corpus.protocol);
    model.feature_mode = ctx.config.feature_mode;
    model.dimension = to_string(d);
    const auto nonzero = (model.w.array() != 0.0).count();
    out << fmt::format("{}: trained on {} sessions ({} without labels), {} of {} weights nonzero{}\n",
                       to_string(d), used.size(), excluded, nonzero, model.w.size(),
                       model.converged ? "" : " [sweep cap reached]");
    outputs.add(ctx.model_path(d), model_to_json(model).dump(1) + "\n");
  }
  outputs.commit(out);
  return 0;
}

int cmd_cv(const Context& ctx, const std::string& dims, std::ostream& out, std::ostream& err) {
  auto corpus = load_corpus_checked(ctx, true);
  FeatureSources src;
  auto fc = resolved_features(ctx, corpus, src, false, err);
  CvOptions opts;
  opts.k = ctx.config.cv.k;
  opts.seed = ctx.config.cv.seed;
  opts.lasso.lambda = ctx.config.lasso.lambda;
  opts.lasso.non_negative = ctx.config.lasso.non_negative;

  std::vector<CvReport> reports;
  json doc = json::array();
  for (auto d : dimensions_from(dims)) {
    auto run = cross_validate(corpus, fc, d, opts);
    if (run.report.n_excluded)
      err << fmt::format("{}: {} sessions without labels excluded\n", to_string(d),
                         run.report.n_excluded);
    doc.push_back(to_json(run.report));
    reports.push_back(std::move(run.report));
  }

  std::string text = fmt::format("{}-fold teacher-disjoint cross-validation, lambda={}{}, protocol={}\n\n",
                                 opts.k, opts.lasso.lambda,
                                 opts.lasso.non_negative ? " (non-negative)" : "",
                                 to_string(corpus.protocol));
  text += render_table(reports, {}, corpus.protocol);
  text += "\nPer-fold detail\n";
  for (const auto& r : reports) {
    text += fmt::format("{} / {}:\n", r.feature_mode, dimension_label(r.dimension, corpus.protocol));
    for (const auto& f : r.per_fold) {
      auto o = [](const std::optional<double>& v) {
        return v ? fmt::format("{:+.3f}", *v) : std::string("undef");
      };
      text += fmt::format("  fold {}  n_test={:<3} R={}  RMSE={:.3f}  spearman={}  qwk={}\n",
                          f.fold, f.n_test, o(f.r), f.rmse, o(f.spearman), o(f.qwk));
      for (const auto& note : f.notes) text += "    note: " + note + "\n";
    }
    if (r.r.n_undefined)
      text += fmt::format("  {} fold(s) with undefined R excluded from the mean\n", r.r.n_undefined);
  }

  OutputSet outputs;
  const auto stem = "cv_" + ctx.mode_dir();
  outputs.add(ctx.workdir() / "reports" / (stem + ".json"), doc.dump(1) + "\n");
  outputs.add(ctx.workdir() / "reports" / (stem + ".txt"), text);
  out << text << "\n";
  outputs.commit(out);
  return 0;
}

int cmd_irr(const Context& ctx, const std::string& dims, std::ostream& out) {
  auto corpus = load_corpus_checked(ctx, true);
  std::vector<IrrReport> reports;
  json doc = json::array();
  for (auto d : dimensions_from(dims)) {
    reports.push_back(inter_rater_reliability(corpus, d));
    doc.push_back(to_json(reports.back()));
  }
  std::string text = "Leave-one-labeler-out inter-rater reliability\n\n";
  text += render_table({}, reports, corpus.protocol);
  for (const auto& r : reports)
    for (const auto& n : r.notes) text += fmt::format("note ({}): {}\n", to_string(r.dimension), n);
  OutputSet outputs;
  outputs.add(ctx.workdir() / "reports" / "irr.json", doc.dump(1) + "\n");
  outputs.add(ctx.workdir() / "reports" / "irr.txt", text);
  out << text << "\n";
  outputs.commit(out);
  return 0;
}

int cmd_score(const Context& ctx, const std::string& dims, std::ostream& out) {
  auto corpus = load_corpus_checked(ctx, !ctx.config.paths.labels.empty());
  auto [names, g] = read_session_features(ctx);
  OutputSet outputs;
  for (auto d : dimensions_from(dims)) {
    auto model = load_model_checked(ctx, d);
    if (model.feature_names != names)
      throw DimensionMismatch("model and feature file disagree on feature names");
    std::string text = "session_id,y_hat,target\n";
    for (const auto& s : corpus.sessions) {
      auto it = g.find(s.session_id);
      if (it == g.end()) throw Error(fmt::format("no features for session {}", s.session_id));
      auto target = try_mean_target(s, d);
      text += csv::format_row({s.session_id, csv::format_double(predict(model, it->second)),
                               target ? csv::format_double(*target) : ""});
    }
    outputs.add(ctx.workdir() / "reports" / fmt::format("scores_{}_{}.csv", ctx.mode_dir(), to_string(d)),
                text);
  }
  outputs.commit(out);
  return 0;
}

std::vector<const Session*> select_sessions(const Corpus& corpus, const std::string& id) {
  std::vector<const Session*> out;
  if (id.empty()) {
    for (const auto& s : corpus.sessions) out.push_back(&s);
    return out;
  }
  const Session* s = corpus.find(id);
  if (!s) throw Error(fmt::format("unknown session '{}'", id));
  out.push_back(s);
  return out;
}

int cmd_explain(const Context& ctx, const std::string& session_id, std::size_t top,
                const std::string& dim_token, bool rationale, std::ostream& out) {
  auto corpus = load_corpus_checked(ctx, false);
  auto features = read_utterance_features(ctx);
  const auto d = parse_dimension(dim_token);
  auto model = load_model_checked(ctx, d);
  std::unique_ptr<llm::ChatBackend> backend;
  if (rationale) backend = make_backend(ctx.config);

  OutputSet outputs;
  std::string printed;
  for (const Session* s : select_sessions(corpus, session_id)) {
    auto it = features.find(s->session_id);
    if (it == features.end()) throw Error(fmt::format("no features for session {}", s->session_id));
    auto digest = explanation_digest(*s, model, it->second, top);
    if (backend) {
      auto tb = top_bottom(marginal_scores(model, it->second), top);
      digest += "indicator rationales for the highest utterances:\n";
      for (const auto& m : tb.top)
        for (const auto& c : m.contributions) {
          if (c.feature.rfind("llm:", 0) != 0) continue;
          const auto indicator = c.feature.substr(4);
          digest += fmt::format("  [{}] '{}':\n    {}\n", m.utterance_index, indicator,
                                llm::explain_indicator(*backend, indicator,
                                                       s->utterances[m.utterance_index].text,
                                                       corpus.protocol));
        }
    }
    const auto stem = fmt::format("{}_{}", s->session_id, to_string(d));
    const auto dir = ctx.workdir() / "explanations" / ctx.mode_dir();
    outputs.add(dir / (stem + ".json"), explanation_json(*s, model, it->second).dump(1) + "\n");
    outputs.add(dir / (stem + ".txt"), digest);
    printed += digest;
  }
  out << printed;
  outputs.commit(out);
  return 0;
}

int cmd_heatmap(const Context& ctx, const std::string& session_id, std::size_t k,
                const std::string& dim_token, std::ostream& out) {
  auto corpus = load_corpus_checked(ctx, false);
  auto features = read_utterance_features(ctx);
  const auto d = parse_dimension(dim_token);
  auto model = load_model_checked(ctx, d);
  render::HeatmapSpec spec;
  spec.k_callouts = k;

  OutputSet outputs;
  for (const Session* s : select_sessions(corpus, session_id)) {
    auto it = features.find(s->session_id);
    if (it == features.end()) throw Error(fmt::format("no features for session {}", s->session_id));
    spec.title = fmt::format("Session {}: {} marginal scores ({})", s->session_id,
                             dimension_label(d, corpus.protocol), ctx.config.feature_mode);
    outputs.add(ctx.workdir() / "heatmaps" / ctx.mode_dir() /
                    fmt::format("{}_{}.svg", s->session_id, to_string(d)),
                render::heatmap_svg(*s, marginal_scores(model, it->second), spec));
  }
  outputs.commit(out);
  return 0;
}

int cmd_synth(std::uint64_t seed, std::size_t sessions, std::size_t teachers, bool noise,
              const std::string& protocol, const std::string& dir, std::ostream& out) {
  synth::Options o;
  o.seed = seed;
  o.sessions = sessions;
  o.teachers = teachers;
  o.noise_only = noise;
  o.protocol = parse_protocol(protocol);
  auto data = synth::generate(o);
  synth::write(data, o, dir);
  out << fmt::format("wrote {} sessions / {} teachers to {} (oracle R dim1={:.3f}, domain={:.3f})\n",
                     sessions, teachers, dir, data.oracle_r.at(Dimension::Dim1),
                     data.oracle_r.at(Dimension::Domain));
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimate CLASS Instructional Support scores from classroom transcripts"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  Overrides o;
  app.add_option("--config", config_path, "Run configuration (JSON)");
  app.add_option("--workdir", o.workdir, "Working directory for all artifacts");
  app.add_option("--seed", o.seed, "Run seed (fold tie-breaks, mock LLM)");
  app.add_option("--protocol", o.protocol, "toddler | prek");
  app.add_option("--feature-mode", o.feature_mode,
                 "bow | llm_all | llm_dim:<dim> | concat | baseline_words | "
                 "baseline_questions | baseline_both");
  app.add_option("--lambda", o.lambda, "L1 regularization strength");
  app.add_flag("--non-negative", o.non_negative, "Constrain weights to be >= 0");
  app.add_option("--llm-backend", o.llm_backend, "mock | remote");
  app.add_option("--llm-mode", o.llm_mode, "prob | binary");
  app.add_option("--llm-context", o.llm_context, "1 or 3 utterances per query");
  app.add_option("--vocab-scope", o.vocab_scope, "fold | corpus");
  app.add_option("--vocab-size", o.vocab_size, "Number of n-grams (K)");
  app.add_option("--folds", o.folds, "Cross-validation folds");
  app.add_option("--transcripts", o.transcripts, "Transcript manifest CSV");
  app.add_option("--labels", o.labels, "Labels CSV");

  auto* ingest = app.add_subcommand("ingest", "Import transcriber output into corpus.json");
  auto* build_vocab = app.add_subcommand("build-vocab", "Build the n-gram vocabulary");
  auto* featurize = app.add_subcommand("featurize", "Write utterance and session feature files");

  std::string dims = "all";
  auto* train = app.add_subcommand("train", "Fit one model per dimension on all labeled sessions");
  train->add_option("--dimension", dims, "dim1 | dim2 | dim3 | domain | all");
  auto* cv = app.add_subcommand("cv", "Teacher-disjoint cross-validation");
  cv->add_option("--dimension", dims, "dim1 | dim2 | dim3 | domain | all");
  auto* irr = app.add_subcommand("irr", "Leave-one-labeler-out inter-rater reliability");
  irr->add_option("--dimension", dims, "dim1 | dim2 | dim3 | domain | all");
  auto* score = app.add_subcommand("score", "Predict every session with the trained models");
  score->add_option("--dimension", dims, "dim1 | dim2 | dim3 | domain | all");

  std::string session_id;
  std::string dim = "domain";
  std::size_t top = 4;
  bool rationale = false;
  auto* explain = app.add_subcommand("explain", "Rank utterances by marginal score");
  explain->add_option("--session", session_id, "Session id (default: all)");
  explain->add_option("--top", top, "Utterances to list at each end");
  explain->add_option("--dimension", dim, "dim1 | dim2 | dim3 | domain");
  explain->add_flag("--rationale", rationale, "Ask the LLM backend to explain indicator hits");

  std::size_t callouts = 4;
  auto* heatmap = app.add_subcommand("heatmap", "Render temporal heatmaps as SVG");
  heatmap->add_option("--session", session_id, "Session id (default: all)");
  heatmap->add_option("--k", callouts, "Callouts above and below the strip");
  heatmap->add_option("--dimension", dim, "dim1 | dim2 | dim3 | domain");

  std::size_t n_sessions = 50;
  std::size_t n_teachers = 10;
  bool noise = false;
  std::string out_dir = "synthetic";
  std::string synth_protocol = "prek";
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic planted-signal corpus");
  synth_cmd->add_option("--sessions", n_sessions, "Number of sessions");
  synth_cmd->add_option("--teachers", n_teachers, "Number of teachers");
  synth_cmd->add_flag("--noise", noise, "Labels independent of the transcripts");
  synth_cmd->add_option("--out", out_dir, "Output directory");
  synth_cmd->add_option("--synth-protocol", synth_protocol, "toddler | prek");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (synth_cmd->parsed())
      return cmd_synth(o.seed.value_or(0), n_sessions, n_teachers, noise,
                       o.protocol.value_or(synth_protocol), out_dir, out);
    const Context ctx = make_context(config_path, o);
    if (ingest->parsed()) return cmd_ingest(ctx, out, err);
    if (build_vocab->parsed()) return cmd_build_vocab(ctx, out);
    if (featurize->parsed()) return cmd_featurize(ctx, out, err);
    if (train->parsed()) return cmd_train(ctx, dims, out);
    if (cv->parsed()) return cmd_cv(ctx, dims, out, err);
    if (irr->parsed()) return cmd_irr(ctx, dims, out);
    if (score->parsed()) return cmd_score(ctx, dims, out);
    if (explain->parsed()) return cmd_explain(ctx, session_id, top, dim, rationale, out);
    if (heatmap->parsed()) return cmd_heatmap(ctx, session_id, callouts, dim, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace instsupp::cli
