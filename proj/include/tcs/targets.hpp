#pragma once

// Soft target vectors for the value slot, label-balance weights and
// per-dimension down-sampling.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tcs/label_space.hpp"

namespace tcs {

// Normalize divides the Gaussian densities by their sum. Softmax applies
// exp() to the densities before normalizing, which flattens the target.
enum class NormalizationMode : std::uint8_t { kNormalize, kSoftmax };

std::string_view normalization_mode_name(NormalizationMode mode);
NormalizationMode parse_normalization_mode(std::string_view name);

inline constexpr double kLogLinearSigma = 4.0;  // in logsec units
inline constexpr double kCircularSigma = 0.5;   // in ring positions

struct SoftTarget {
  Dimension dimension = Dimension::kDuration;
  std::vector<double> probs;  // one entry per label of the dimension
};

// LogLinear: Gaussian on logsec anchors centred on the gold anchor.
// Circular: Gaussian on ring distance to the gold label.
// Categorical: one-hot regardless of mode.
SoftTarget build_soft_target(Dimension dimension, std::size_t gold_index,
                             NormalizationMode mode = NormalizationMode::kNormalize);
SoftTarget build_soft_target(Dimension dimension, std::string_view gold_label,
                             NormalizationMode mode = NormalizationMode::kNormalize);

inline constexpr double kMinInstanceWeight = 0.1;
inline constexpr double kMaxInstanceWeight = 10.0;

using LabelCounts = std::map<std::string, std::uint64_t>;

// total / (num_labels * count(label)), clipped to [0.1, 10]. num_labels is
// the number of observed labels in `counts`.
double instance_weight(std::string_view label, const LabelCounts& counts);

// Per-(dimension, label) weights. Counts are gathered first; weights are
// then read from the frozen table.
class WeightTable {
 public:
  void add(Dimension dimension, std::string_view label, std::uint64_t n = 1);
  double weight(Dimension dimension, std::string_view label) const;
  const LabelCounts& counts(Dimension dimension) const;

 private:
  std::map<Dimension, LabelCounts> counts_;
};

using DimensionCounts = std::map<Dimension, std::uint64_t>;

// Keep probability per dimension: min non-frequency count / count, capped at
// 1. Frequency is always kept.
std::map<Dimension, double> balance_dimensions(const DimensionCounts& counts);

// Bernoulli down-sampling driven by the "sampling" stream of `seed`.
// Returns retained indices in ascending order.
std::vector<std::size_t> balanced_indices(const std::vector<Dimension>& dimensions,
                                          std::uint64_t seed);

}  // namespace tcs
