#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcs/extraction.hpp"

namespace tcs {

nlohmann::ordered_json tuple_to_json(const TemporalTuple& tuple);

// Throws Error(kSchema) on missing fields or a value outside the
// dimension's label space.
TemporalTuple tuple_from_json(const nlohmann::json& record);

// One compact JSON object per line, fields in declaration order.
void write_tuples(std::ostream& out, const std::vector<TemporalTuple>& tuples);

// Skips blank lines and '#' header lines. Any bad record aborts with
// Error(kSchema) naming the line.
std::vector<TemporalTuple> read_tuples(std::istream& in);

// "# key=value" lines echoing the configuration atop output files.
void write_comment_header(std::ostream& out, const std::vector<std::string>& lines);

}  // namespace tcs
