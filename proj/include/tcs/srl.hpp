#pragma once

// Reader for SRL-annotated sentences stored as JSON Lines. The record schema
// is documented in docs/srl_input_schema.md.

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tcs {

struct SrlArgument {
  std::string role;
  std::size_t begin = 0;  // token span [begin, end)
  std::size_t end = 0;
};

struct SrlFrame {
  std::size_t verb_index = 0;
  std::vector<SrlArgument> arguments;
};

struct SrlSentence {
  std::string doc_id;
  std::size_t sent_index = 0;
  std::vector<std::string> tokens;
  std::optional<std::vector<std::string>> left_context;
  std::optional<std::vector<std::string>> right_context;
  std::vector<SrlFrame> frames;
};

inline constexpr std::string_view kTemporalRole = "ARG-TMP";

// "ARG-TMP" or "ARGM-TMP", any case.
bool is_temporal_role(std::string_view role);

bool has_temporal_argument(const SrlSentence& sentence);

// Throws Error(kSchema) when a parsed sentence breaks a structural invariant.
void validate_sentence(const SrlSentence& sentence);

// Parses and validates one record. Throws Error(kSchema) on violations.
SrlSentence sentence_from_json(const nlohmann::json& record);
nlohmann::ordered_json sentence_to_json(const SrlSentence& sentence);

struct IngestIssue {
  std::size_t line = 0;
  std::string message;
};

struct IngestStats {
  std::size_t records = 0;  // non-blank, non-comment lines seen
  std::size_t yielded = 0;
  std::size_t skipped = 0;
  std::vector<IngestIssue> issues;
};

// Pull-style reader: yields sentences in file order and records every
// skipped line. Blank lines and lines starting with '#' are not records.
class CorpusReader {
 public:
  explicit CorpusReader(std::istream& in) : in_(in) {}

  std::optional<SrlSentence> next();
  const IngestStats& stats() const { return stats_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
  IngestStats stats_;
};

std::vector<SrlSentence> read_corpus(std::istream& in, IngestStats* stats = nullptr);

}  // namespace tcs
