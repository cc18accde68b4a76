#pragma once

// Pattern rules that turn one SRL temporal argument into an
// (event, value, dimension) tuple.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tcs/label_space.hpp"
#include "tcs/srl.hpp"

namespace tcs {

struct Provenance {
  std::string doc_id;
  std::size_t sent_index = 0;
  std::size_t frame = 0;  // ordinal of the frame inside its sentence

  bool operator==(const Provenance&) const = default;
};

struct TemporalTuple {
  std::vector<std::string> event_tokens;  // temporal argument removed
  std::size_t verb_index = 0;             // into event_tokens
  Dimension dimension = Dimension::kDuration;
  std::string value;                           // label in label_space(dimension)
  std::vector<std::string> arg_tmp_event_tokens;  // non-empty only for hierarchy
  Provenance provenance;
  // Neighbour sentences carried through from the corpus when present.
  std::optional<std::vector<std::string>> left_context;
  std::optional<std::vector<std::string>> right_context;

  bool operator==(const TemporalTuple&) const = default;
};

using TokenSpan = std::span<const std::string>;

struct NumericMatch {
  double value = 0.0;
  std::size_t width = 0;
};

// Digit strings ("2", "1.5", "2,000"), number words one..twelve, and the
// articles "a"/"an" (read as 1).
std::optional<NumericMatch> parse_numeric(TokenSpan tokens, std::size_t at);

// Unit word (singular or plural) -> unit.
std::optional<DurationUnit> parse_unit_word(std::string_view token);

// Default gate for frequency candidates. An argument must contain one of
// these words before the frequency parser runs.
const std::vector<std::string>& default_frequency_triggers();

std::optional<DurationUnit> extract_duration(TokenSpan arg);
std::optional<DurationUnit> extract_frequency(
    TokenSpan arg, const std::vector<std::string>& triggers = default_frequency_triggers());
std::optional<DurationUnit> extract_upper_bound(TokenSpan arg);

struct TypicalTimeMatch {
  Dimension dimension = Dimension::kTypicalDay;
  std::string label;

  bool operator==(const TypicalTimeMatch&) const = default;
};

// Typical-time keyword -> (sub-dimension, label), e.g. "mondays" -> week/monday.
std::optional<TypicalTimeMatch> lookup_typical_keyword(std::string_view token);
std::optional<TypicalTimeMatch> extract_typical_time(TokenSpan arg);

struct HierarchyMatch {
  std::string label;
  std::vector<std::string> embedded_event;
};

std::optional<HierarchyMatch> extract_hierarchy(TokenSpan arg);

// Applies the extractors in precedence order hierarchy > frequency >
// duration > upper-bound > typical-time and returns at most one tuple.
std::vector<TemporalTuple> classify_temporal_argument(const SrlSentence& sentence,
                                                      std::size_t frame_ordinal,
                                                      const SrlArgument& arg);

// Every (frame, temporal argument) pair of the sentence, in frame order.
std::vector<TemporalTuple> extract_sentence(const SrlSentence& sentence);

// Runs extract_sentence over a corpus with `workers` threads; output order
// always follows input order.
std::vector<TemporalTuple> extract_corpus(const std::vector<SrlSentence>& sentences,
                                          std::size_t workers = 1);

}  // namespace tcs
