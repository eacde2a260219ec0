#include "instsupp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "instsupp/csv.hpp"
#include "instsupp/errors.hpp"
#include "instsupp/metrics.hpp"

namespace instsupp::synth {

using nlohmann::json;

namespace {

const std::vector<std::string>& filler() {
  static const std::vector<std::string> lines{
      "Good morning, everybody.",
      "Sit down on the carpet, please.",
      "Put your hands in your lap.",
      "Okay, we're going to clean up now.",
      "Thank you, good job.",
      "Can you give me the red one?",
      "Let's wash our hands.",
      "Come here, please.",
      "Where is your chair?",
      "Hold it with two hands.",
      "Yes.",
      "No, no, not in your mouth.",
      "Look at me.",
      "All right, line up at the door.",
      "I like how you are coloring.",
      "Who wants some more milk?",
      "It's time for snack.",
      "Are you ready?",
      "We have to wait our turn.",
      "Put it in the bin.",
      "Let me see.",
      "That's a big one.",
      "Walk, please.",
      "One, two, three.",
      "Is this yours?",
      "You got it.",
      "Turn around and sit down.",
      "I need you to listen.",
      "Open the book to the first page.",
      "The blue one goes here.",
      "Don't push your friend.",
      "Okay.",
      "Right here.",
      "We're going outside after lunch.",
      "Get your coat.",
      "Pick up the blocks.",
      "Oh, I see.",
      "Just like this.",
      "Nice and quiet.",
      "Say thank you to your friend."};
  return lines;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::string whisper_json(const Session& s) {
  json segs = json::array();
  std::string full;
  for (const auto& u : s.utterances) {
    segs.push_back({{"id", u.index}, {"start", u.start_s}, {"end", u.end_s}, {"text", u.text}});
    full += u.text;
  }
  return json{{"text", full}, {"segments", std::move(segs)}, {"language", "en"}}.dump(1) + "\n";
}

}  // namespace

Dataset generate(const Options& options) {
  if (options.sessions == 0 || options.teachers == 0)
    throw ValidationError("synth: need at least one session and one teacher");
  if (options.min_utterances < 30 || options.max_utterances < options.min_utterances)
    throw ValidationError("synth: utterance range must satisfy 30 <= min <= max");

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> n_utts(options.min_utterances,
                                                    options.max_utterances);
  std::uniform_int_distribution<int> planted(0, 12);
  std::uniform_int_distribution<std::size_t> pick_filler(0, filler().size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> label_noise(0.0, 0.37);
  std::normal_distribution<double> pure_noise(0.0, 1.0);

  const char* labelers[] = {"rater_a", "rater_b", "rater_c", "rater_d"};
  struct Coef {
    double base, a, b;
  };
  const Coef coefs[] = {{1.8, 0.15, 0.15}, {1.5, 0.20, 0.10}, {1.5, 0.10, 0.20}};

  Dataset data;
  data.corpus.protocol = options.protocol;
  data.manifest_csv = "session_id,teacher_id,file\n";
  std::string labels = "session_id,labeler_id,dimension,score\n";
  std::map<Dimension, std::vector<double>> signal;

  for (std::size_t s = 0; s < options.sessions; ++s) {
    Session session;
    session.session_id = fmt::format("s{:03d}", s + 1);
    session.teacher_id = fmt::format("t{:02d}", s % options.teachers + 1);

    const std::size_t n = n_utts(rng);
    const int c_a = planted(rng);
    const int c_b = planted(rng);
    std::vector<std::string> texts(n);
    for (auto& t : texts) t = filler()[pick_filler(rng)];
    std::vector<std::size_t> slots(n);
    for (std::size_t i = 0; i < n; ++i) slots[i] = i;
    std::shuffle(slots.begin(), slots.end(), rng);
    for (int i = 0; i < c_a; ++i) texts[slots[static_cast<std::size_t>(i)]] = kPlantedA;
    for (int i = 0; i < c_b; ++i) texts[slots[static_cast<std::size_t>(c_a + i)]] = kPlantedB;

    const double slot = 900.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double start = round2(static_cast<double>(i) * slot + 0.2 * slot * unit(rng));
      const double end = std::min(900.0, round2(start + (0.4 + 0.4 * unit(rng)) * slot));
      session.utterances.push_back(Utterance{i, start, end, " " + texts[i]});
    }

    std::vector<std::size_t> raters{0, 1, 2, 3};
    std::shuffle(raters.begin(), raters.end(), rng);
    for (int r = 0; r < 2; ++r) {
      const char* rater = labelers[raters[static_cast<std::size_t>(r)]];
      for (int d = 0; d < 3; ++d) {
        const double mean = options.noise_only
                                ? 4.0
                                : coefs[d].base + coefs[d].a * c_a + coefs[d].b * c_b;
        const double noise = options.noise_only ? pure_noise(rng) : label_noise(rng);
        const double score = std::clamp(round2(mean + noise), 1.0, 7.0);
        labels += fmt::format("{},{},dim{},{}\n", session.session_id, rater, d + 1,
                              csv::format_double(score));
      }
    }
    for (int d = 0; d < 3; ++d)
      signal[static_cast<Dimension>(d)].push_back(coefs[d].base + coefs[d].a * c_a +
                                                  coefs[d].b * c_b);
    signal[Dimension::Domain].push_back(signal[Dimension::Dim1].back() +
                                        signal[Dimension::Dim2].back() +
                                        signal[Dimension::Dim3].back());

    data.manifest_csv += fmt::format("{},{},transcripts/{}.json\n", session.session_id,
                                     session.teacher_id, session.session_id);
    data.transcripts.emplace(session.session_id, whisper_json(session));
    data.corpus.sessions.push_back(std::move(session));
  }

  data.labels_csv = labels;
  attach_labels(data.corpus, parse_labels(labels));
  for (auto d : kAllDimensions) {
    std::vector<double> targets;
    for (const auto& s : data.corpus.sessions) targets.push_back(mean_target(s, d));
    Eigen::Map<const Eigen::VectorXd> a(signal[d].data(),
                                        static_cast<Eigen::Index>(signal[d].size()));
    Eigen::Map<const Eigen::VectorXd> b(targets.data(), static_cast<Eigen::Index>(targets.size()));
    auto r = options.noise_only || data.corpus.sessions.size() < 2
                 ? std::optional<double>(0.0)
                 : metrics::pearson(a, b);
    data.oracle_r[d] = r.value_or(0.0);
  }
  return data;
}

void write(const Dataset& data, const Options& options, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "transcripts");
  auto put = [](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", p.string()));
    out << text;
  };
  for (const auto& [id, text] : data.transcripts) put(dir / "transcripts" / (id + ".json"), text);
  put(dir / "manifest.csv", data.manifest_csv);
  put(dir / "labels.csv", data.labels_csv);

  json config = {{"protocol", to_string(options.protocol)},
                 {"paths",
                  {{"transcripts", "manifest.csv"}, {"labels", "labels.csv"}, {"workdir", "work"}}},
                 {"feature_mode", "bow"},
                 {"cv", {{"k", 5}, {"seed", options.seed}}}};
  put(dir / "config.json", config.dump(2) + "\n");

  json oracle = json::object();
  for (const auto& [d, r] : data.oracle_r) oracle[to_string(d)] = r;
  json info = {{"seed", options.seed},
               {"sessions", options.sessions},
               {"teachers", options.teachers},
               {"noise_only", options.noise_only},
               {"planted", {kPlantedA, kPlantedB}},
               {"oracle_r", oracle}};
  put(dir / "synth_info.json", info.dump(2) + "\n");
}

}  // namespace instsupp::synth
