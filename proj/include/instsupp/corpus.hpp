#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace instsupp {

enum class Protocol { Toddler, PreK };

/// Dim1 is Facilitation of Learning and Development under the toddler
/// protocol and Concept Development under PreK. Domain is the sum of the
/// three dimension scores (Instructional Support).
enum class Dimension { Dim1, Dim2, Dim3, Domain };

inline constexpr Dimension kAllDimensions[] = {Dimension::Dim1, Dimension::Dim2,
                                              Dimension::Dim3, Dimension::Domain};

std::string to_string(Protocol p);
std::string to_string(Dimension d);
Protocol parse_protocol(std::string_view token);
/// Accepts dim1|dim2|dim3|domain (case-insensitive).
Dimension parse_dimension(std::string_view token);
/// Human-readable dimension name for a protocol, e.g. "ConceptDev".
std::string dimension_label(Dimension d, Protocol p);

/// Valid score range for a dimension: [1,7] or [3,21] for Domain.
struct ScoreRange {
  int lo;
  int hi;
};
ScoreRange score_range(Dimension d);

struct Utterance {
  std::size_t index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;
};

struct LabelRecord {
  std::string labeler_id;
  Dimension dimension = Dimension::Dim1;
  double score = 0.0;
};

struct Session {
  std::string session_id;
  std::string teacher_id;
  std::vector<Utterance> utterances;
  std::vector<LabelRecord> labels;
};

struct Corpus {
  std::vector<Session> sessions;
  Protocol protocol = Protocol::PreK;

  const Session* find(std::string_view session_id) const;
  /// Sorted, unique teacher ids.
  std::vector<std::string> teachers() const;
};

struct ImportOptions {
  bool keep_empty_text = false;
};

/// Reads a transcriber output document. Accepts a bare segment array, an
/// object with a "segments" array, or an object with a "transcription"
/// array whose entries carry millisecond "offsets". Only start, end and
/// text are read. Warnings (inverted or out-of-range timings) are appended
/// to `warnings` when given.
Session import_whisper(const std::filesystem::path& path, std::string session_id,
                       std::string teacher_id, const ImportOptions& options = {},
                       std::vector<std::string>* warnings = nullptr);
Session parse_whisper(std::string_view document, std::string session_id,
                      std::string teacher_id, const ImportOptions& options = {},
                      std::vector<std::string>* warnings = nullptr);

/// Native session document {session_id, teacher_id, utterances:[...]}.
nlohmann::json session_to_json(const Session& session);
Session session_from_json(const nlohmann::json& doc);
void export_session(const Session& session, const std::filesystem::path& path);
Session load_session(const std::filesystem::path& path);

/// Whole corpus as one document {protocol, sessions:[native session...]}.
nlohmann::json corpus_to_json(const Corpus& corpus);
Corpus corpus_from_json(const nlohmann::json& doc);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

using LabelTable = std::map<std::string, std::vector<LabelRecord>>;

/// Parses `session_id,labeler_id,dimension,score` rows. Domain rows are
/// synthesized for each labeler who scored all three dimensions of a
/// session without an explicit Domain row.
LabelTable load_labels(const std::filesystem::path& path);
LabelTable parse_labels(std::string_view csv_text);

/// Attaches label groups to sessions by id. Returns the number of label
/// groups whose session is not in the corpus.
std::size_t attach_labels(Corpus& corpus, const LabelTable& labels);

/// Mean score across labelers; throws MissingLabel when nobody scored it.
double mean_target(const Session& session, Dimension dimension);
std::optional<double> try_mean_target(const Session& session, Dimension dimension);

}  // namespace instsupp
