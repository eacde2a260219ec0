#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "instsupp/corpus.hpp"

namespace instsupp::synth {

/// Planted phrases whose per-session counts drive the synthetic labels.
inline constexpr const char* kPlantedA = "What do you notice about this picture?";
inline constexpr const char* kPlantedB = "Tell me more about your tower.";

struct Options {
  std::uint64_t seed = 0;
  std::size_t sessions = 50;
  std::size_t teachers = 10;
  std::size_t min_utterances = 80;
  std::size_t max_utterances = 120;
  /// Labels independent of the transcripts.
  bool noise_only = false;
  Protocol protocol = Protocol::PreK;
};

/// Synthetic corpus. Each session holds c_a copies of kPlantedA and c_b of
/// kPlantedB (c uniform on 0..12) among filler classroom talk. Two of four
/// labelers score each session:
///   dim1 = 1.8 + 0.15 c_a + 0.15 c_b + e
///   dim2 = 1.5 + 0.20 c_a + 0.10 c_b + e
///   dim3 = 1.5 + 0.10 c_a + 0.20 c_b + e,   e ~ N(0, 0.37^2), clipped to [1, 7]
/// so the noiseless signal correlates with the mean label at R ~ 0.95.
/// With noise_only every score is 4 + N(0, 1), clipped.
struct Dataset {
  Corpus corpus;                                     // labels attached
  std::map<std::string, std::string> transcripts;    // session_id -> transcriber JSON
  std::string labels_csv;
  std::string manifest_csv;
  /// Pearson R between the noiseless signal and the mean label, per dimension.
  std::map<Dimension, double> oracle_r;
};

Dataset generate(const Options& options);

/// Writes transcripts/<id>.json, manifest.csv, labels.csv, config.json and
/// synth_info.json under `dir`.
void write(const Dataset& data, const Options& options, const std::filesystem::path& dir);

}  // namespace instsupp::synth
