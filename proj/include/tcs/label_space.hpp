#pragma once

// Temporal dimensions, their label inventories, unit arithmetic and the
// label distances shared by target construction and evaluation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tcs {

enum class Dimension : std::uint8_t {
  kDuration,
  kFrequency,
  kUpperBound,
  kTypicalDay,
  kTypicalWeek,
  kTypicalMonth,
  kTypicalSeason,
  kHierarchy,
};

inline constexpr std::size_t kNumDimensions = 8;

inline constexpr std::array<Dimension, kNumDimensions> kAllDimensions = {
    Dimension::kDuration,     Dimension::kFrequency,   Dimension::kUpperBound,
    Dimension::kTypicalDay,   Dimension::kTypicalWeek, Dimension::kTypicalMonth,
    Dimension::kTypicalSeason, Dimension::kHierarchy,
};

inline constexpr std::size_t dimension_index(Dimension d) {
  return static_cast<std::size_t>(d);
}

// Snake-case name used in files and on the command line ("typical_week").
std::string_view dimension_name(Dimension d);

// Accepts the snake-case name or the CamelCase spelling, case-insensitively.
std::optional<Dimension> parse_dimension(std::string_view name);
Dimension require_dimension(std::string_view name);

enum class DurationUnit : std::uint8_t {
  kSecond,
  kMinute,
  kHour,
  kDay,
  kWeek,
  kMonth,
  kYear,
  kDecade,
  kCentury,
};

inline constexpr std::size_t kNumUnits = 9;

inline constexpr std::array<DurationUnit, kNumUnits> kAllUnits = {
    DurationUnit::kSecond, DurationUnit::kMinute, DurationUnit::kHour,
    DurationUnit::kDay,    DurationUnit::kWeek,   DurationUnit::kMonth,
    DurationUnit::kYear,   DurationUnit::kDecade, DurationUnit::kCentury,
};

// Month = 30 days, year = 365 days, decade = 10 years, century = 100 years.
inline constexpr std::array<std::int64_t, kNumUnits> kUnitSeconds = {
    1, 60, 3'600, 86'400, 604'800, 2'592'000, 31'536'000, 315'360'000, 3'153'600'000,
};

std::string_view unit_name(DurationUnit unit);
std::optional<DurationUnit> parse_unit_name(std::string_view name);

inline constexpr std::int64_t canonical_seconds(DurationUnit unit) {
  return kUnitSeconds[static_cast<std::size_t>(unit)];
}

// Natural log of the unit's length in seconds.
double logsec(DurationUnit unit);

// Unit closest to `seconds` in log space; ties go to the smaller unit.
// Throws Error(kInvalidArgument) for non-positive or non-finite input.
DurationUnit nearest_unit(double seconds);

enum class Topology : std::uint8_t { kLogLinear, kCircular, kCategorical };

class LabelSpace {
 public:
  LabelSpace(Dimension dimension, Topology topology, std::vector<std::string> labels,
             std::vector<double> anchors);

  Dimension dimension() const { return dimension_; }
  Topology topology() const { return topology_; }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }

  // logsec anchor of label i; only meaningful for LogLinear spaces.
  double anchor(std::size_t i) const { return anchors_.at(i); }

  std::optional<std::size_t> index_of(std::string_view label) const;
  // Throws Error(kInvalidArgument) for labels outside the space.
  std::size_t require_index(std::string_view label) const;

 private:
  Dimension dimension_;
  Topology topology_;
  std::vector<std::string> labels_;
  std::vector<double> anchors_;
};

const LabelSpace& label_space(Dimension d);

// Ring distance min(|i-j|, n-|i-j|).
int circular_distance(std::size_t i, std::size_t j, std::size_t n);
int circular_distance(std::string_view a, std::string_view b, const LabelSpace& space);

// Rank difference |rank(a) - rank(b)| on a LogLinear space.
int linear_distance(std::string_view a, std::string_view b, const LabelSpace& space);

// One "[dimension]" section per dimension followed by one label per line.
std::string label_manifest();

}  // namespace tcs
