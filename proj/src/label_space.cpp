#include "tcs/label_space.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "tcs/error.hpp"
#include "text_util.hpp"

namespace tcs {
namespace {

constexpr std::array<std::string_view, kNumDimensions> kDimensionNames = {
    "duration",     "frequency",    "upper_bound",    "typical_day",
    "typical_week", "typical_month", "typical_season", "hierarchy",
};

constexpr std::array<std::string_view, kNumDimensions> kDimensionCamelNames = {
    "Duration",    "Frequency",    "UpperBound",    "TypicalDay",
    "TypicalWeek", "TypicalMonth", "TypicalSeason", "Hierarchy",
};

constexpr std::array<std::string_view, kNumUnits> kUnitNames = {
    "second", "minute", "hour", "day", "week", "month", "year", "decade", "century",
};

std::vector<std::string> unit_labels() {
  return {kUnitNames.begin(), kUnitNames.end()};
}

std::vector<double> unit_anchors() {
  std::vector<double> anchors;
  for (DurationUnit u : kAllUnits) anchors.push_back(logsec(u));
  return anchors;
}

std::array<LabelSpace, kNumDimensions> make_spaces() {
  using T = Topology;
  return {
      LabelSpace(Dimension::kDuration, T::kLogLinear, unit_labels(), unit_anchors()),
      LabelSpace(Dimension::kFrequency, T::kLogLinear, unit_labels(), unit_anchors()),
      LabelSpace(Dimension::kUpperBound, T::kLogLinear, unit_labels(), unit_anchors()),
      LabelSpace(Dimension::kTypicalDay, T::kCircular,
                 {"midnight", "dawn", "morning", "noon", "afternoon", "evening", "night",
                  "overnight"},
                 {}),
      LabelSpace(Dimension::kTypicalWeek, T::kCircular,
                 {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday",
                  "sunday"},
                 {}),
      LabelSpace(Dimension::kTypicalMonth, T::kCircular,
                 {"january", "february", "march", "april", "may", "june", "july", "august",
                  "september", "october", "november", "december"},
                 {}),
      LabelSpace(Dimension::kTypicalSeason, T::kCircular,
                 {"spring", "summer", "fall", "winter"}, {}),
      LabelSpace(Dimension::kHierarchy, T::kCategorical,
                 {"before", "after", "during", "when"}, {}),
  };
}

}  // namespace

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kSchema: return "schema";
    case ErrorKind::kNumeric: return "numeric";
  }
  return "unknown";
}

std::string_view dimension_name(Dimension d) { return kDimensionNames[dimension_index(d)]; }

std::optional<Dimension> parse_dimension(std::string_view name) {
  for (std::size_t i = 0; i < kNumDimensions; ++i) {
    if (detail::iequals(name, kDimensionNames[i]) ||
        detail::iequals(name, kDimensionCamelNames[i])) {
      return kAllDimensions[i];
    }
  }
  return std::nullopt;
}

Dimension require_dimension(std::string_view name) {
  if (auto d = parse_dimension(name)) return *d;
  throw Error(ErrorKind::kInvalidArgument, "unknown dimension '" + std::string(name) + "'");
}

std::string_view unit_name(DurationUnit unit) {
  return kUnitNames[static_cast<std::size_t>(unit)];
}

std::optional<DurationUnit> parse_unit_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumUnits; ++i) {
    if (detail::iequals(name, kUnitNames[i])) return kAllUnits[i];
  }
  return std::nullopt;
}

double logsec(DurationUnit unit) {
  return std::log(static_cast<double>(canonical_seconds(unit)));
}

DurationUnit nearest_unit(double seconds) {
  if (!(seconds > 0.0) || !std::isfinite(seconds)) {
    throw Error(ErrorKind::kInvalidArgument, "nearest_unit requires a positive finite length");
  }
  const double x = std::log(seconds);
  DurationUnit best = DurationUnit::kSecond;
  double best_gap = std::abs(x - logsec(best));
  for (DurationUnit u : kAllUnits) {
    const double gap = std::abs(x - logsec(u));
    // Strict comparison keeps the smaller unit on ties.
    if (gap < best_gap) {
      best = u;
      best_gap = gap;
    }
  }
  return best;
}

LabelSpace::LabelSpace(Dimension dimension, Topology topology, std::vector<std::string> labels,
                       std::vector<double> anchors)
    : dimension_(dimension),
      topology_(topology),
      labels_(std::move(labels)),
      anchors_(std::move(anchors)) {}

std::optional<std::size_t> LabelSpace::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (detail::iequals(label, labels_[i])) return i;
  }
  return std::nullopt;
}

std::size_t LabelSpace::require_index(std::string_view label) const {
  if (auto i = index_of(label)) return *i;
  throw Error(ErrorKind::kInvalidArgument, "label '" + std::string(label) +
                                               "' is not in the " +
                                               std::string(dimension_name(dimension_)) +
                                               " label space");
}

const LabelSpace& label_space(Dimension d) {
  static const std::array<LabelSpace, kNumDimensions> spaces = make_spaces();
  return spaces[dimension_index(d)];
}

int circular_distance(std::size_t i, std::size_t j, std::size_t n) {
  const std::size_t diff = i > j ? i - j : j - i;
  return static_cast<int>(std::min(diff, n - diff));
}

int circular_distance(std::string_view a, std::string_view b, const LabelSpace& space) {
  if (space.topology() != Topology::kCircular) {
    throw Error(ErrorKind::kInvalidArgument, "circular_distance needs a circular label space");
  }
  return circular_distance(space.require_index(a), space.require_index(b), space.size());
}

int linear_distance(std::string_view a, std::string_view b, const LabelSpace& space) {
  if (space.topology() != Topology::kLogLinear) {
    throw Error(ErrorKind::kInvalidArgument, "linear_distance needs an ordered label space");
  }
  const auto i = static_cast<long>(space.require_index(a));
  const auto j = static_cast<long>(space.require_index(b));
  return static_cast<int>(std::labs(i - j));
}

std::string label_manifest() {
  std::ostringstream out;
  for (Dimension d : kAllDimensions) {
    out << '[' << dimension_name(d) << "]\n";
    for (const auto& label : label_space(d).labels()) out << label << '\n';
  }
  return out.str();
}

}  // namespace tcs
