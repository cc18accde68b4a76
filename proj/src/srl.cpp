#include "tcs/srl.hpp"

#include <string>

#include "tcs/error.hpp"
#include "text_util.hpp"

namespace tcs {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& message) {
  throw Error(ErrorKind::kSchema, message);
}

std::vector<std::string> string_array(const json& value, const char* field) {
  if (!value.is_array()) schema_error(std::string(field) + " must be an array of strings");
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& item : value) {
    if (!item.is_string()) schema_error(std::string(field) + " must contain only strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::size_t index_field(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) schema_error(std::string("missing field ") + field);
  if (!it->is_number_unsigned()) {
    schema_error(std::string(field) + " must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

}  // namespace

bool is_temporal_role(std::string_view role) {
  return detail::iequals(role, kTemporalRole) || detail::iequals(role, "ARGM-TMP");
}

bool has_temporal_argument(const SrlSentence& sentence) {
  for (const auto& frame : sentence.frames) {
    for (const auto& arg : frame.arguments) {
      if (is_temporal_role(arg.role)) return true;
    }
  }
  return false;
}

void validate_sentence(const SrlSentence& s) {
  if (s.tokens.empty()) schema_error("tokens must be non-empty");
  const std::size_t n = s.tokens.size();
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    const auto& frame = s.frames[f];
    const std::string where = "frame " + std::to_string(f);
    if (frame.verb_index >= n) schema_error(where + ": verb_index out of range");
    for (const auto& arg : frame.arguments) {
      if (arg.begin >= arg.end) schema_error(where + ": empty span for role " + arg.role);
      if (arg.end > n) schema_error(where + ": span end exceeds token count");
      if (frame.verb_index >= arg.begin && frame.verb_index < arg.end) {
        schema_error(where + ": span of role " + arg.role + " covers the verb");
      }
    }
  }
}

SrlSentence sentence_from_json(const json& record) {
  if (!record.is_object()) schema_error("record must be a JSON object");
  SrlSentence s;
  auto doc = record.find("doc_id");
  if (doc == record.end() || !doc->is_string()) schema_error("doc_id must be a string");
  s.doc_id = doc->get<std::string>();
  s.sent_index = index_field(record, "sent_index");

  auto tokens = record.find("tokens");
  if (tokens == record.end()) schema_error("missing field tokens");
  s.tokens = string_array(*tokens, "tokens");

  if (auto it = record.find("left_context"); it != record.end() && !it->is_null()) {
    s.left_context = string_array(*it, "left_context");
  }
  if (auto it = record.find("right_context"); it != record.end() && !it->is_null()) {
    s.right_context = string_array(*it, "right_context");
  }

  auto frames = record.find("frames");
  if (frames == record.end() || !frames->is_array()) schema_error("frames must be an array");
  for (const auto& fj : *frames) {
    if (!fj.is_object()) schema_error("frame must be an object");
    SrlFrame frame;
    frame.verb_index = index_field(fj, "verb_index");
    auto args = fj.find("args");
    if (args == fj.end() || !args->is_array()) schema_error("frame args must be an array");
    for (const auto& aj : *args) {
      auto role = aj.find("role");
      auto span = aj.find("span");
      if (role == aj.end() || !role->is_string()) schema_error("arg role must be a string");
      if (span == aj.end() || !span->is_array() || span->size() != 2 ||
          !(*span)[0].is_number_unsigned() || !(*span)[1].is_number_unsigned()) {
        schema_error("arg span must be [start, end] with non-negative integers");
      }
      frame.arguments.push_back(
          {role->get<std::string>(), (*span)[0].get<std::size_t>(), (*span)[1].get<std::size_t>()});
    }
    s.frames.push_back(std::move(frame));
  }
  validate_sentence(s);
  return s;
}

nlohmann::ordered_json sentence_to_json(const SrlSentence& s) {
  nlohmann::ordered_json out;
  out["doc_id"] = s.doc_id;
  out["sent_index"] = s.sent_index;
  out["tokens"] = s.tokens;
  auto frames = nlohmann::ordered_json::array();
  for (const auto& frame : s.frames) {
    nlohmann::ordered_json fj;
    fj["verb_index"] = frame.verb_index;
    auto args = nlohmann::ordered_json::array();
    for (const auto& a : frame.arguments) {
      args.push_back({{"role", a.role}, {"span", {a.begin, a.end}}});
    }
    fj["args"] = std::move(args);
    frames.push_back(std::move(fj));
  }
  out["frames"] = std::move(frames);
  if (s.left_context) out["left_context"] = *s.left_context;
  if (s.right_context) out["right_context"] = *s.right_context;
  return out;
}

std::optional<SrlSentence> CorpusReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    ++stats_.records;
    try {
      SrlSentence s = sentence_from_json(json::parse(line));
      ++stats_.yielded;
      return s;
    } catch (const json::exception& e) {
      ++stats_.skipped;
      stats_.issues.push_back({line_no_, std::string("malformed JSON: ") + e.what()});
    } catch (const Error& e) {
      ++stats_.skipped;
      stats_.issues.push_back({line_no_, e.what()});
    }
  }
  if (in_.bad()) throw Error(ErrorKind::kIo, "failed reading corpus stream");
  return std::nullopt;
}

std::vector<SrlSentence> read_corpus(std::istream& in, IngestStats* stats) {
  if (!in) throw Error(ErrorKind::kIo, "corpus stream is not readable");
  CorpusReader reader(in);
  std::vector<SrlSentence> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  if (stats) *stats = reader.stats();
  return out;
}

}  // namespace tcs
