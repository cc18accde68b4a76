#include "tcs/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tcs/error.hpp"
#include "tcs/rng.hpp"

namespace tcs {
namespace {

double gaussian_density(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

std::string_view normalization_mode_name(NormalizationMode mode) {
  return mode == NormalizationMode::kSoftmax ? "softmax" : "normalize";
}

NormalizationMode parse_normalization_mode(std::string_view name) {
  if (name == "normalize") return NormalizationMode::kNormalize;
  if (name == "softmax") return NormalizationMode::kSoftmax;
  throw Error(ErrorKind::kInvalidArgument,
              "normalization mode must be normalize or softmax, got " + std::string(name));
}

SoftTarget build_soft_target(Dimension dimension, std::size_t gold, NormalizationMode mode) {
  const LabelSpace& space = label_space(dimension);
  const std::size_t n = space.size();
  if (gold >= n) throw Error(ErrorKind::kInvalidArgument, "gold label index out of range");

  SoftTarget target{dimension, std::vector<double>(n, 0.0)};
  if (space.topology() == Topology::kCategorical) {
    target.probs[gold] = 1.0;
    return target;
  }

  std::vector<double> density(n);
  for (std::size_t i = 0; i < n; ++i) {
    density[i] = space.topology() == Topology::kLogLinear
                     ? gaussian_density(space.anchor(i), space.anchor(gold), kLogLinearSigma)
                     : gaussian_density(circular_distance(i, gold, n), 0.0, kCircularSigma);
  }
  if (mode == NormalizationMode::kSoftmax) {
    // Densities are bounded by 1/(sigma*sqrt(2*pi)), so exp() cannot overflow.
    for (double& d : density) d = std::exp(d);
  }
  double total = 0.0;
  for (double d : density) total += d;
  for (std::size_t i = 0; i < n; ++i) target.probs[i] = density[i] / total;
  return target;
}

SoftTarget build_soft_target(Dimension dimension, std::string_view gold_label,
                             NormalizationMode mode) {
  return build_soft_target(dimension, label_space(dimension).require_index(gold_label), mode);
}

double instance_weight(std::string_view label, const LabelCounts& counts) {
  auto it = counts.find(std::string(label));
  if (it == counts.end() || it->second == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "no observations for label '" + std::string(label) + "'");
  }
  std::uint64_t total = 0;
  std::size_t observed = 0;
  for (const auto& [_, c] : counts) {
    total += c;
    if (c > 0) ++observed;
  }
  const double w = static_cast<double>(total) /
                   (static_cast<double>(observed) * static_cast<double>(it->second));
  return std::clamp(w, kMinInstanceWeight, kMaxInstanceWeight);
}

void WeightTable::add(Dimension dimension, std::string_view label, std::uint64_t n) {
  counts_[dimension][std::string(label)] += n;
}

double WeightTable::weight(Dimension dimension, std::string_view label) const {
  return instance_weight(label, counts(dimension));
}

const LabelCounts& WeightTable::counts(Dimension dimension) const {
  static const LabelCounts empty;
  auto it = counts_.find(dimension);
  return it == counts_.end() ? empty : it->second;
}

std::map<Dimension, double> balance_dimensions(const DimensionCounts& counts) {
  std::uint64_t target = std::numeric_limits<std::uint64_t>::max();
  for (const auto& [d, c] : counts) {
    if (d != Dimension::kFrequency && c > 0) target = std::min(target, c);
  }
  std::map<Dimension, double> keep;
  for (const auto& [d, c] : counts) {
    if (d == Dimension::kFrequency || c == 0) {
      keep[d] = 1.0;
    } else {
      keep[d] = std::min(1.0, static_cast<double>(target) / static_cast<double>(c));
    }
  }
  return keep;
}

std::vector<std::size_t> balanced_indices(const std::vector<Dimension>& dimensions,
                                          std::uint64_t seed) {
  DimensionCounts counts;
  for (Dimension d : dimensions) ++counts[d];
  const auto keep = balance_dimensions(counts);
  Rng rng = make_stream(seed, "sampling");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dimensions.size(); ++i) {
    // One draw per tuple keeps later draws independent of earlier outcomes.
    const double u = uniform01(rng);
    if (u < keep.at(dimensions[i])) out.push_back(i);
  }
  return out;
}

}  // namespace tcs
