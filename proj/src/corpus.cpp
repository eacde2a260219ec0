#include "instsupp/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "instsupp/csv.hpp"
#include "instsupp/errors.hpp"

namespace instsupp {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double number_field(const json& seg, const char* key, std::size_t i) {
  auto it = seg.find(key);
  if (it == seg.end() || !it->is_number())
    throw ParseError(fmt::format("segment {}: missing numeric '{}'", i, key), 0);
  return it->get<double>();
}

}  // namespace

std::string to_string(Protocol p) { return p == Protocol::Toddler ? "toddler" : "prek"; }

std::string to_string(Dimension d) {
  switch (d) {
    case Dimension::Dim1: return "dim1";
    case Dimension::Dim2: return "dim2";
    case Dimension::Dim3: return "dim3";
    case Dimension::Domain: return "domain";
  }
  return "?";
}

Protocol parse_protocol(std::string_view token) {
  auto t = lower(token);
  if (t == "toddler") return Protocol::Toddler;
  if (t == "prek") return Protocol::PreK;
  throw ValidationError(fmt::format("unknown protocol '{}'", token));
}

Dimension parse_dimension(std::string_view token) {
  auto t = lower(token);
  if (t == "dim1") return Dimension::Dim1;
  if (t == "dim2") return Dimension::Dim2;
  if (t == "dim3") return Dimension::Dim3;
  if (t == "domain") return Dimension::Domain;
  throw ValidationError(fmt::format("unknown dimension '{}'", token));
}

std::string dimension_label(Dimension d, Protocol p) {
  switch (d) {
    case Dimension::Dim1: return p == Protocol::Toddler ? "FacLearnDev" : "ConceptDev";
    case Dimension::Dim2: return "QualityFeedback";
    case Dimension::Dim3: return "LanguageModeling";
    case Dimension::Domain: return "InstSupport";
  }
  return "?";
}

ScoreRange score_range(Dimension d) {
  return d == Dimension::Domain ? ScoreRange{3, 21} : ScoreRange{1, 7};
}

const Session* Corpus::find(std::string_view session_id) const {
  for (const auto& s : sessions)
    if (s.session_id == session_id) return &s;
  return nullptr;
}

std::vector<std::string> Corpus::teachers() const {
  std::set<std::string> ids;
  for (const auto& s : sessions) ids.insert(s.teacher_id);
  return {ids.begin(), ids.end()};
}

Session parse_whisper(std::string_view document, std::string session_id,
                      std::string teacher_id, const ImportOptions& options,
                      std::vector<std::string>* warnings) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: malformed transcript at byte {}: {}", session_id,
                                 e.byte, e.what()),
                     e.byte);
  }

  const json* segments = nullptr;
  bool millis = false;
  if (doc.is_array()) {
    segments = &doc;
  } else if (doc.is_object() && doc.contains("segments") && doc["segments"].is_array()) {
    segments = &doc["segments"];
  } else if (doc.is_object() && doc.contains("transcription") &&
             doc["transcription"].is_array()) {
    segments = &doc["transcription"];
    millis = true;
  } else {
    throw ParseError(fmt::format("{}: no segment list found", session_id), 0);
  }

  Session session;
  session.session_id = std::move(session_id);
  session.teacher_id = std::move(teacher_id);

  for (std::size_t i = 0; i < segments->size(); ++i) {
    const json& seg = (*segments)[i];
    if (!seg.is_object())
      throw ParseError(fmt::format("segment {} is not an object", i), 0);
    double start = 0.0;
    double end = 0.0;
    if (millis) {
      const json& off = seg.at("offsets");
      start = number_field(off, "from", i) / 1000.0;
      end = number_field(off, "to", i) / 1000.0;
    } else {
      start = number_field(seg, "start", i);
      end = number_field(seg, "end", i);
    }
    auto text_it = seg.find("text");
    if (text_it == seg.end() || !text_it->is_string())
      throw ParseError(fmt::format("segment {}: missing string 'text'", i), 0);
    std::string text = text_it->get<std::string>();
    if (is_blank(text) && !options.keep_empty_text) continue;

    if (warnings) {
      if (end < start)
        warnings->push_back(fmt::format("{}: segment {} ends ({}) before it starts ({})",
                                        session.session_id, i, end, start));
      if (start < 0.0 || end > 900.0)
        warnings->push_back(fmt::format("{}: segment {} [{}, {}] outside 0-900 s",
                                        session.session_id, i, start, end));
    }
    session.utterances.push_back(
        Utterance{session.utterances.size(), start, end, std::move(text)});
  }

  if (session.utterances.empty())
    throw EmptySession(fmt::format("{}: no detected speech", session.session_id));
  return session;
}

Session import_whisper(const std::filesystem::path& path, std::string session_id,
                       std::string teacher_id, const ImportOptions& options,
                       std::vector<std::string>* warnings) {
  return parse_whisper(read_file(path), std::move(session_id), std::move(teacher_id),
                       options, warnings);
}

json session_to_json(const Session& session) {
  json utts = json::array();
  for (const auto& u : session.utterances)
    utts.push_back({{"index", u.index}, {"start_s", u.start_s}, {"end_s", u.end_s},
                    {"text", u.text}});
  return {{"session_id", session.session_id},
          {"teacher_id", session.teacher_id},
          {"utterances", std::move(utts)}};
}

Session session_from_json(const json& doc) {
  Session s;
  try {
    s.session_id = doc.at("session_id").get<std::string>();
    s.teacher_id = doc.at("teacher_id").get<std::string>();
    for (const auto& u : doc.at("utterances")) {
      s.utterances.push_back(Utterance{u.at("index").get<std::size_t>(),
                                       u.at("start_s").get<double>(),
                                       u.at("end_s").get<double>(),
                                       u.at("text").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("bad session document: {}", e.what()), 0);
  }
  for (std::size_t i = 0; i < s.utterances.size(); ++i)
    if (s.utterances[i].index != i)
      throw ValidationError(fmt::format("{}: utterance indices must be 0..n-1 in order",
                                        s.session_id));
  if (s.teacher_id.empty())
    throw ValidationError(fmt::format("{}: empty teacher_id", s.session_id));
  return s;
}

void export_session(const Session& session, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << session_to_json(session).dump(2) << '\n';
}

Session load_session(const std::filesystem::path& path) {
  auto text = read_file(path);
  try {
    return session_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: malformed at byte {}", path.string(), e.byte), e.byte);
  }
}

json corpus_to_json(const Corpus& corpus) {
  json sessions = json::array();
  for (const auto& s : corpus.sessions) sessions.push_back(session_to_json(s));
  return {{"protocol", to_string(corpus.protocol)}, {"sessions", std::move(sessions)}};
}

Corpus corpus_from_json(const json& doc) {
  Corpus c;
  c.protocol = parse_protocol(doc.at("protocol").get<std::string>());
  std::set<std::string> seen;
  for (const auto& s : doc.at("sessions")) {
    c.sessions.push_back(session_from_json(s));
    if (!seen.insert(c.sessions.back().session_id).second)
      throw ValidationError(
          fmt::format("duplicate session_id '{}'", c.sessions.back().session_id));
  }
  return c;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << corpus_to_json(corpus).dump(1) << '\n';
}

Corpus load_corpus(const std::filesystem::path& path) {
  auto text = read_file(path);
  try {
    return corpus_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: malformed at byte {}", path.string(), e.byte), e.byte);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()), 0);
  }
}

LabelTable parse_labels(std::string_view csv_text) {
  auto rows = csv::parse(csv_text);
  if (rows.empty()) throw ValidationError("labels: empty file");
  const csv::Row header{"session_id", "labeler_id", "dimension", "score"};
  if (rows.front() != header)
    throw ValidationError("labels: header must be session_id,labeler_id,dimension,score");

  LabelTable table;
  std::set<std::tuple<std::string, std::string, Dimension>> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 4)
      throw ValidationError(fmt::format("labels line {}: expected 4 fields", r + 1));
    LabelRecord rec{row[1], parse_dimension(row[2]), csv::parse_double(row[3])};
    auto range = score_range(rec.dimension);
    if (!(rec.score >= range.lo && rec.score <= range.hi))
      throw ValidationError(fmt::format("labels line {}: {} score {} outside [{},{}]", r + 1,
                                        to_string(rec.dimension), rec.score, range.lo,
                                        range.hi));
    if (!seen.emplace(row[0], rec.labeler_id, rec.dimension).second)
      throw ValidationError(fmt::format("labels line {}: duplicate ({}, {}, {})", r + 1,
                                        row[0], rec.labeler_id, to_string(rec.dimension)));
    table[row[0]].push_back(std::move(rec));
  }

  for (auto& [session_id, records] : table) {
    std::map<std::string, std::map<Dimension, double>> by_labeler;
    for (const auto& rec : records) by_labeler[rec.labeler_id][rec.dimension] = rec.score;
    for (const auto& [labeler, dims] : by_labeler) {
      if (dims.count(Dimension::Domain)) continue;
      if (dims.count(Dimension::Dim1) && dims.count(Dimension::Dim2) &&
          dims.count(Dimension::Dim3))
        records.push_back(LabelRecord{labeler, Dimension::Domain,
                                      dims.at(Dimension::Dim1) + dims.at(Dimension::Dim2) +
                                          dims.at(Dimension::Dim3)});
    }
  }
  return table;
}

LabelTable load_labels(const std::filesystem::path& path) {
  return parse_labels(read_file(path));
}

std::size_t attach_labels(Corpus& corpus, const LabelTable& labels) {
  std::size_t unmatched = 0;
  for (const auto& [session_id, records] : labels) {
    auto it = std::find_if(corpus.sessions.begin(), corpus.sessions.end(),
                           [&](const Session& s) { return s.session_id == session_id; });
    if (it == corpus.sessions.end()) {
      ++unmatched;
      continue;
    }
    it->labels = records;
  }
  return unmatched;
}

std::optional<double> try_mean_target(const Session& session, Dimension dimension) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& rec : session.labels) {
    if (rec.dimension != dimension) continue;
    sum += rec.score;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

double mean_target(const Session& session, Dimension dimension) {
  auto m = try_mean_target(session, dimension);
  if (!m)
    throw MissingLabel(
        fmt::format("{}: no {} labels", session.session_id, to_string(dimension)));
  return *m;
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  - " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

}  // namespace instsupp
