#include <doctest.h>

#include <json.hpp>

#include "support.hpp"

using testing::run_cli;
using testing::slurp;
namespace fs = std::filesystem;

namespace {

// Writes a small synthetic corpus into `dir` and ingests it.
void prepare(const fs::path& dir, const std::string& seed = "3") {
  auto r = run_cli(dir, {"--seed", seed, "synth", "--sessions", "20", "--teachers", "5", "--out", "."});
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  r = run_cli(dir, {"--config", "config.json", "ingest"});
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
}

std::size_t count_lines_starting(const std::string& text, const std::string& prefix) {
  std::size_t n = 0, pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    if (text.compare(pos, prefix.size(), prefix) == 0) ++n;
    pos = eol + 1;
  }
  return n;
}

}  // namespace

TEST_CASE("bag-of-words pipeline end to end") {
  testing::TempDir dir("cli-bow");
  prepare(dir.path());
  const std::vector<std::string> cfg{"--config", "config.json"};
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), cfg.begin(), cfg.end());
    auto r = run_cli(dir.path(), args);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    return r;
  };

  run({"build-vocab"});
  CHECK(fs::exists(dir / "work/vocab.tsv"));
  run({"featurize"});
  auto header = slurp(dir / "work/features/bow/sessions.csv");
  CHECK(std::count(header.begin(), header.begin() + static_cast<std::ptrdiff_t>(header.find('\n')), ',') == 302);
  run({"train"});
  for (const char* d : {"dim1", "dim2", "dim3", "domain"})
    CHECK(fs::exists(dir / "work/models/bow" / (std::string(d) + ".json")));

  auto cv = run({"cv", "--dimension", "dim1"});
  auto report = nlohmann::json::parse(slurp(dir / "work/reports/cv_bow.json"));
  REQUIRE(report.size() == 1);
  CHECK(report[0]["per_fold"].size() == 5);
  CHECK(cv.out.find("bow") != std::string::npos);

  run({"irr"});
  CHECK(fs::exists(dir / "work/reports/irr.txt"));
  run({"score", "--dimension", "domain"});
  auto scores = slurp(dir / "work/reports/scores_bow_domain.csv");
  CHECK(count_lines_starting(scores, "s") == 21);  // header + 20 sessions

  auto ex = run({"explain", "--session", "s001", "--top", "4", "--dimension", "dim1"});
  CHECK(count_lines_starting(ex.out, "  [") == 8);
  CHECK(fs::exists(dir / "work/explanations/bow/s001_dim1.json"));

  run({"heatmap", "--session", "s001", "--dimension", "dim1"});
  auto svg = slurp(dir / "work/heatmaps/bow/s001_dim1.svg");
  CHECK(svg.rfind("<?xml", 0) == 0);
}

TEST_CASE("mock LLM featurization is reproducible and cached") {
  testing::TempDir a("cli-llm-a"), b("cli-llm-b");
  prepare(a.path());
  prepare(b.path());
  for (const auto* d : {&a, &b}) {
    auto r = run_cli(d->path(), {"--config", "config.json", "--feature-mode", "llm_all", "featurize"});
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  }
  CHECK(slurp(a / "work/features/llm_all/utterances.csv") ==
        slurp(b / "work/features/llm_all/utterances.csv"));
  std::size_t cache_files = 0;
  for (const auto& e : fs::directory_iterator(a / "work/cache")) cache_files += e.is_regular_file();
  CHECK(cache_files == 1);

  auto r = run_cli(a.path(), {"--config", "config.json", "--feature-mode", "llm_dim:dim3", "featurize"});
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  auto header = slurp(a / "work/features/llm_dim-dim3/sessions.csv");
  CHECK(header.rfind("session_id,llm:ask open-ended questions,", 0) == 0);
}

TEST_CASE("failures name the missing input and write nothing") {
  testing::TempDir dir("cli-err");
  prepare(dir.path());
  auto r = run_cli(dir.path(), {"--config", "config.json", "featurize"});
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("vocab.tsv") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "work/features"));

  r = run_cli(dir.path(), {"--config", "config.json", "train"});
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("sessions.csv") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "work/models"));

  r = run_cli(dir.path(), {"--config", "missing.json", "cv"});
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("missing.json") != std::string::npos);

  r = run_cli(dir.path(), {"--config", "config.json", "--lambda", "-2", "--folds", "1", "cv"});
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("lasso.lambda") != std::string::npos);
  CHECK(r.err.find("cv.k") != std::string::npos);

  r = run_cli(dir.path(), {"--config", "config.json", "explain", "--session", "nope"});
  CHECK(r.exit_code != 0);
}

TEST_CASE("sessions without speech are excluded at ingest") {
  testing::TempDir dir("cli-empty");
  testing::spit(dir / "a.json", R"([{"start": 0, "end": 2, "text": "What is that?"}])");
  testing::spit(dir / "b.json", R"([{"start": 0, "end": 2, "text": "  "}])");
  testing::spit(dir / "manifest.csv", "session_id,teacher_id,file\nsa,t1,a.json\nsb,t1,b.json\n");
  auto r = run_cli(dir.path(), {"--transcripts", "manifest.csv", "ingest"});
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(r.out.find("1 excluded") != std::string::npos);
  auto corpus = nlohmann::json::parse(slurp(dir / "work/corpus.json"));
  CHECK(corpus["sessions"].size() == 1);
}
