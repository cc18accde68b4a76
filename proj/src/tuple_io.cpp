#include "tcs/tuple_io.hpp"

#include "tcs/error.hpp"

namespace tcs {
namespace {

using nlohmann::json;

std::vector<std::string> strings_field(const json& record, const char* field, bool required) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) {
    if (required) throw Error(ErrorKind::kSchema, std::string("missing field ") + field);
    return {};
  }
  if (!it->is_array()) throw Error(ErrorKind::kSchema, std::string(field) + " must be an array");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw Error(ErrorKind::kSchema, std::string(field) + " holds non-strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

nlohmann::ordered_json tuple_to_json(const TemporalTuple& t) {
  nlohmann::ordered_json out;
  out["event_tokens"] = t.event_tokens;
  out["verb_index"] = t.verb_index;
  out["dimension"] = std::string(dimension_name(t.dimension));
  out["value"] = t.value;
  out["arg_tmp_event_tokens"] = t.arg_tmp_event_tokens;
  out["provenance"] = {{"doc_id", t.provenance.doc_id},
                       {"sent_index", t.provenance.sent_index},
                       {"frame", t.provenance.frame}};
  if (t.left_context) out["left_context"] = *t.left_context;
  if (t.right_context) out["right_context"] = *t.right_context;
  return out;
}

TemporalTuple tuple_from_json(const json& record) {
  if (!record.is_object()) throw Error(ErrorKind::kSchema, "tuple must be a JSON object");
  TemporalTuple t;
  t.event_tokens = strings_field(record, "event_tokens", true);
  auto verb = record.find("verb_index");
  if (verb == record.end() || !verb->is_number_unsigned()) {
    throw Error(ErrorKind::kSchema, "verb_index must be a non-negative integer");
  }
  t.verb_index = verb->get<std::size_t>();
  if (t.event_tokens.empty() || t.verb_index >= t.event_tokens.size()) {
    throw Error(ErrorKind::kSchema, "verb_index must point into non-empty event_tokens");
  }
  auto dim = record.find("dimension");
  if (dim == record.end() || !dim->is_string()) {
    throw Error(ErrorKind::kSchema, "dimension must be a string");
  }
  auto parsed = parse_dimension(dim->get<std::string>());
  if (!parsed) throw Error(ErrorKind::kSchema, "unknown dimension " + dim->get<std::string>());
  t.dimension = *parsed;
  auto value = record.find("value");
  if (value == record.end() || !value->is_string()) {
    throw Error(ErrorKind::kSchema, "value must be a string");
  }
  const auto& space = label_space(t.dimension);
  auto index = space.index_of(value->get<std::string>());
  if (!index) throw Error(ErrorKind::kSchema, "value outside label space: " + value->dump());
  t.value = space.label(*index);
  t.arg_tmp_event_tokens = strings_field(record, "arg_tmp_event_tokens", false);
  if (t.arg_tmp_event_tokens.empty() != (t.dimension != Dimension::kHierarchy)) {
    throw Error(ErrorKind::kSchema, "arg_tmp_event_tokens must be non-empty exactly for hierarchy");
  }
  if (auto prov = record.find("provenance"); prov != record.end() && prov->is_object()) {
    t.provenance.doc_id = prov->value("doc_id", std::string());
    t.provenance.sent_index = prov->value("sent_index", std::size_t{0});
    t.provenance.frame = prov->value("frame", std::size_t{0});
  }
  if (record.contains("left_context")) t.left_context = strings_field(record, "left_context", true);
  if (record.contains("right_context")) {
    t.right_context = strings_field(record, "right_context", true);
  }
  return t;
}

void write_tuples(std::ostream& out, const std::vector<TemporalTuple>& tuples) {
  for (const auto& t : tuples) out << tuple_to_json(t).dump() << '\n';
}

std::vector<TemporalTuple> read_tuples(std::istream& in) {
  if (!in) throw Error(ErrorKind::kIo, "tuple stream is not readable");
  std::vector<TemporalTuple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    try {
      out.push_back(tuple_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kSchema, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::kSchema, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (in.bad()) throw Error(ErrorKind::kIo, "failed reading tuple stream");
  return out;
}

void write_comment_header(std::ostream& out, const std::vector<std::string>& lines) {
  for (const auto& line : lines) out << "# " << line << '\n';
}

}  // namespace tcs
