#pragma once

// Planted-rule corpus: every verb always carries one (dimension, label)
// pair, so a model that reads the verb can recover the label.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tcs/evaluation.hpp"
#include "tcs/extraction.hpp"
#include "tcs/model.hpp"

namespace tcs {

struct PlantedVerb {
  std::string verb;
  Dimension dimension = Dimension::kDuration;
  std::string label;
};

// 24 verbs over every ordinal dimension.
const std::vector<PlantedVerb>& planted_verbs();

struct PlantedOptions {
  std::size_t train_tuples = 6000;
  std::size_t heldout_per_verb = 8;
  // Probability that a training label is moved one rank away from the
  // planted one. Held-out golds are never perturbed.
  double neighbour_noise = 0.2;
  std::uint64_t seed = 0;
};

struct PlantedCorpus {
  std::vector<TemporalTuple> train;
  std::vector<EvalInstance> heldout;
};

// Events are "<subject> <verb> <filler...>". Held-out (subject, filler)
// combinations never occur in the training half for the same verb. Draws
// come from the "synthetic" stream of `seed`.
PlantedCorpus make_planted_corpus(const PlantedOptions& options);

// Largest increase met while walking away from the argmax along the label
// order (both ways round the ring for circular dimensions); 0 for a
// unimodal distribution.
double unimodality_violation(const std::vector<double>& probs, Dimension dimension);

inline bool is_unimodal(const std::vector<double>& probs, Dimension dimension,
                        double tolerance = 0.0) {
  return unimodality_violation(probs, dimension) <= tolerance;
}

struct GradSuiteCase {
  ModelShape shape;
  double init_std = 0.0;
  std::size_t records = 0;
  GradCheckResult result;
};

// `configs` small random encoders, each checked on a few masked planted
// records (soft [Val], hard [Dim] and event slots) at `coordinates`
// random parameter indices.
std::vector<GradSuiteCase> run_gradient_suite(std::uint64_t seed, std::size_t configs,
                                              std::size_t coordinates);

}  // namespace tcs
