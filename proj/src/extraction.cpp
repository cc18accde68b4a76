#include "tcs/extraction.hpp"

#include <algorithm>
#include <charconv>
#include <thread>
#include <unordered_map>

#include "text_util.hpp"

namespace tcs {
namespace {

using detail::to_lower;

std::vector<std::string> lowered(TokenSpan tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(to_lower(t));
  return out;
}

bool contains(const std::vector<std::string>& tokens, std::string_view word) {
  return std::find(tokens.begin(), tokens.end(), word) != tokens.end();
}

bool is_one_of(std::string_view token, std::initializer_list<std::string_view> words) {
  return std::find(words.begin(), words.end(), token) != words.end();
}

const std::unordered_map<std::string, double>& number_words() {
  static const std::unordered_map<std::string, double> table = {
      {"a", 1},     {"an", 1},     {"one", 1},    {"two", 2},   {"three", 3},
      {"four", 4},  {"five", 5},   {"six", 6},    {"seven", 7}, {"eight", 8},
      {"nine", 9},  {"ten", 10},   {"eleven", 11}, {"twelve", 12},
  };
  return table;
}

const std::unordered_map<std::string, DurationUnit>& unit_words() {
  using U = DurationUnit;
  static const std::unordered_map<std::string, DurationUnit> table = {
      {"second", U::kSecond},  {"seconds", U::kSecond},  {"minute", U::kMinute},
      {"minutes", U::kMinute}, {"hour", U::kHour},       {"hours", U::kHour},
      {"day", U::kDay},        {"days", U::kDay},        {"week", U::kWeek},
      {"weeks", U::kWeek},     {"month", U::kMonth},     {"months", U::kMonth},
      {"year", U::kYear},      {"years", U::kYear},      {"decade", U::kDecade},
      {"decades", U::kDecade}, {"century", U::kCentury}, {"centuries", U::kCentury},
  };
  return table;
}

const std::unordered_map<std::string, DurationUnit>& frequency_adverbs() {
  using U = DurationUnit;
  static const std::unordered_map<std::string, DurationUnit> table = {
      {"hourly", U::kHour},   {"daily", U::kDay},      {"nightly", U::kDay},
      {"weekly", U::kWeek},   {"monthly", U::kMonth},  {"yearly", U::kYear},
      {"annually", U::kYear},
  };
  return table;
}

const std::unordered_map<std::string, TypicalTimeMatch>& typical_keywords() {
  static const std::unordered_map<std::string, TypicalTimeMatch> table = [] {
    std::unordered_map<std::string, TypicalTimeMatch> t;
    for (Dimension d : {Dimension::kTypicalDay, Dimension::kTypicalWeek,
                        Dimension::kTypicalMonth, Dimension::kTypicalSeason}) {
      for (const auto& label : label_space(d).labels()) {
        t[label] = {d, label};
        if (d != Dimension::kTypicalMonth) t[label + "s"] = {d, label};
      }
    }
    const auto day = [](const char* label) {
      return TypicalTimeMatch{Dimension::kTypicalDay, label};
    };
    t["daybreak"] = day("dawn");
    t["sunrise"] = day("dawn");
    t["midday"] = day("noon");
    t["dusk"] = day("evening");
    t["tonight"] = day("night");
    t["nighttime"] = day("night");
    t["autumn"] = {Dimension::kTypicalSeason, "fall"};
    t.erase("falls");
    t.erase("midnights");
    t.erase("overnights");
    return t;
  }();
  return table;
}

// Length in seconds of "[numeric] unit" starting at `at`, or nothing.
// A singular "second" followed by more words reads as an ordinal.
std::optional<double> quantity_at(const std::vector<std::string>& lower, std::size_t at) {
  double multiplier = 1.0;
  std::size_t k = at;
  if (auto num = parse_numeric(lower, k)) {
    multiplier = num->value;
    k += num->width;
  }
  if (k >= lower.size()) return std::nullopt;
  auto unit = parse_unit_word(lower[k]);
  if (!unit) return std::nullopt;
  if (lower[k] == "second" && k + 1 < lower.size()) return std::nullopt;
  return multiplier * static_cast<double>(canonical_seconds(*unit));
}

// Cycle length of a recurring typical-time keyword ("every monday" -> week).
double recurrence_period(Dimension d) {
  switch (d) {
    case Dimension::kTypicalDay: return static_cast<double>(canonical_seconds(DurationUnit::kDay));
    case Dimension::kTypicalWeek: return static_cast<double>(canonical_seconds(DurationUnit::kWeek));
    default: return static_cast<double>(canonical_seconds(DurationUnit::kYear));
  }
}

std::vector<std::string> erase_span(const std::vector<std::string>& tokens, std::size_t begin,
                                    std::size_t end) {
  std::vector<std::string> out;
  out.reserve(tokens.size() - (end - begin));
  out.insert(out.end(), tokens.begin(), tokens.begin() + static_cast<long>(begin));
  out.insert(out.end(), tokens.begin() + static_cast<long>(end), tokens.end());
  return out;
}

}  // namespace

std::optional<NumericMatch> parse_numeric(TokenSpan tokens, std::size_t at) {
  if (at >= tokens.size()) return std::nullopt;
  const std::string token = to_lower(tokens[at]);
  if (auto it = number_words().find(token); it != number_words().end()) {
    return NumericMatch{it->second, 1};
  }
  if (token.empty() || !std::isdigit(static_cast<unsigned char>(token.front()))) {
    return std::nullopt;
  }
  std::string digits;
  for (char c : token) {
    if (c == ',') continue;
    if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.') return std::nullopt;
    digits.push_back(c);
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || !(value > 0.0)) {
    return std::nullopt;
  }
  return NumericMatch{value, 1};
}

std::optional<DurationUnit> parse_unit_word(std::string_view token) {
  const auto& table = unit_words();
  if (auto it = table.find(to_lower(token)); it != table.end()) return it->second;
  return std::nullopt;
}

const std::vector<std::string>& default_frequency_triggers() {
  static const std::vector<std::string> triggers = {
      "every", "each",     "per",     "once",   "twice", "times",
      "annually", "monthly", "weekly", "daily", "hourly",
  };
  return triggers;
}

std::optional<DurationUnit> extract_duration(TokenSpan arg) {
  const auto lower = lowered(arg);
  if (lower.empty() || lower[0] != "for") return std::nullopt;
  auto seconds = quantity_at(lower, 1);
  if (!seconds) return std::nullopt;
  return nearest_unit(*seconds);
}

std::optional<DurationUnit> extract_frequency(TokenSpan arg,
                                              const std::vector<std::string>& triggers) {
  const auto lower = lowered(arg);
  if (contains(lower, "when")) return std::nullopt;
  const bool triggered = std::any_of(lower.begin(), lower.end(), [&](const std::string& t) {
    return contains(triggers, t);
  });
  if (!triggered) return std::nullopt;

  // Occurrence count: "once", "twice", "thrice" or "<number> times".
  double count = 1.0;
  std::size_t count_end = lower.size() + 1;  // past the end: no count phrase
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const auto& t = lower[i];
    if (t == "once" || t == "twice" || t == "thrice") {
      count = t == "once" ? 1.0 : (t == "twice" ? 2.0 : 3.0);
      count_end = i + 1;
      break;
    }
    if (t == "times" && i > 0) {
      if (auto num = parse_numeric(lower, i - 1)) {
        count = num->value;
        count_end = i + 1;
        break;
      }
    }
  }

  // Period: an adverb ("weekly") or an introducer followed by a unit or a
  // typical-time keyword ("every 3 days", "per week", "twice a month").
  std::optional<double> period;
  for (std::size_t j = 0; j < lower.size() && !period; ++j) {
    const auto& t = lower[j];
    if (auto it = frequency_adverbs().find(t); it != frequency_adverbs().end()) {
      period = static_cast<double>(canonical_seconds(it->second));
      break;
    }
    const bool introducer =
        is_one_of(t, {"every", "each", "per"}) || (j >= count_end && is_one_of(t, {"a", "an"}));
    if (!introducer || j + 1 >= lower.size()) continue;
    if (auto seconds = quantity_at(lower, j + 1)) {
      period = seconds;
    } else if (auto keyword = lookup_typical_keyword(lower[j + 1])) {
      period = recurrence_period(keyword->dimension);
    }
  }
  if (!period) return std::nullopt;
  return nearest_unit(*period / count);
}

std::optional<DurationUnit> extract_upper_bound(TokenSpan arg) {
  const auto lower = lowered(arg);
  if (lower.empty()) return std::nullopt;
  if (is_one_of(lower[0], {"in", "within"})) {
    if (auto seconds = quantity_at(lower, 1)) return nearest_unit(*seconds);
  }
  if (contains(lower, "yesterday") || contains(lower, "tomorrow")) return DurationUnit::kDay;
  for (std::size_t j = 0; j + 1 < lower.size(); ++j) {
    if (!is_one_of(lower[j], {"next", "last", "previous", "recent"})) continue;
    if (auto seconds = quantity_at(lower, j + 1)) return nearest_unit(*seconds);
  }
  return std::nullopt;
}

std::optional<TypicalTimeMatch> lookup_typical_keyword(std::string_view token) {
  const auto& table = typical_keywords();
  if (auto it = table.find(to_lower(token)); it != table.end()) return it->second;
  return std::nullopt;
}

std::optional<TypicalTimeMatch> extract_typical_time(TokenSpan arg) {
  const auto lower = lowered(arg);
  for (const auto& t : lower) {
    if (is_one_of(t, {"until", "till", "since", "following"})) return std::nullopt;
  }
  for (const auto& t : lower) {
    if (auto match = lookup_typical_keyword(t)) return match;
  }
  return std::nullopt;
}

std::optional<HierarchyMatch> extract_hierarchy(TokenSpan arg) {
  if (arg.size() < 2) return std::nullopt;
  const std::string head = to_lower(arg[0]);
  if (!is_one_of(head, {"before", "after", "during", "while", "when"})) return std::nullopt;
  HierarchyMatch match;
  match.label = head == "while" ? "during" : head;
  match.embedded_event.assign(arg.begin() + 1, arg.end());
  return match;
}

std::vector<TemporalTuple> classify_temporal_argument(const SrlSentence& sentence,
                                                      std::size_t frame_ordinal,
                                                      const SrlArgument& arg) {
  const SrlFrame& frame = sentence.frames.at(frame_ordinal);
  const TokenSpan all(sentence.tokens);
  const TokenSpan tokens = all.subspan(arg.begin, arg.end - arg.begin);

  TemporalTuple tuple;
  bool matched = false;
  if (auto h = extract_hierarchy(tokens)) {
    tuple.dimension = Dimension::kHierarchy;
    tuple.value = h->label;
    tuple.arg_tmp_event_tokens = std::move(h->embedded_event);
    matched = true;
  } else if (auto f = extract_frequency(tokens)) {
    tuple.dimension = Dimension::kFrequency;
    tuple.value = unit_name(*f);
    matched = true;
  } else if (auto d = extract_duration(tokens)) {
    tuple.dimension = Dimension::kDuration;
    tuple.value = unit_name(*d);
    matched = true;
  } else if (auto u = extract_upper_bound(tokens)) {
    tuple.dimension = Dimension::kUpperBound;
    tuple.value = unit_name(*u);
    matched = true;
  } else if (auto t = extract_typical_time(tokens)) {
    tuple.dimension = t->dimension;
    tuple.value = t->label;
    matched = true;
  }
  if (!matched) return {};

  tuple.event_tokens = erase_span(sentence.tokens, arg.begin, arg.end);
  tuple.verb_index = frame.verb_index >= arg.end ? frame.verb_index - (arg.end - arg.begin)
                                                 : frame.verb_index;
  tuple.provenance = {sentence.doc_id, sentence.sent_index, frame_ordinal};
  tuple.left_context = sentence.left_context;
  tuple.right_context = sentence.right_context;
  return {std::move(tuple)};
}

std::vector<TemporalTuple> extract_sentence(const SrlSentence& sentence) {
  std::vector<TemporalTuple> out;
  for (std::size_t f = 0; f < sentence.frames.size(); ++f) {
    for (const auto& arg : sentence.frames[f].arguments) {
      if (!is_temporal_role(arg.role)) continue;
      for (auto& t : classify_temporal_argument(sentence, f, arg)) out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<TemporalTuple> extract_corpus(const std::vector<SrlSentence>& sentences,
                                          std::size_t workers) {
  workers = std::max<std::size_t>(1, std::min(workers, sentences.size()));
  std::vector<std::vector<TemporalTuple>> parts(workers);
  auto run = [&](std::size_t w) {
    const std::size_t begin = sentences.size() * w / workers;
    const std::size_t end = sentences.size() * (w + 1) / workers;
    for (std::size_t i = begin; i < end; ++i) {
      for (auto& t : extract_sentence(sentences[i])) parts[w].push_back(std::move(t));
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (auto& th : threads) th.join();
  }
  std::vector<TemporalTuple> out;
  for (auto& part : parts) {
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace tcs
