#pragma once

// Rank-distance metric on ordered and circular label sets, per-dimension
// reports and predicted-distribution dumps.

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tcs/label_space.hpp"
#include "tcs/model.hpp"

namespace tcs {

struct EvalInstance {
  std::vector<std::string> event_tokens;
  std::size_t verb_index = 0;
  Dimension dimension = Dimension::kDuration;
  std::string gold;
};

bool has_rank_distance(Dimension d);

// Linear rank difference on LogLinear spaces, ring distance on circular
// ones. Hierarchy has no ordinal structure and is rejected.
int rank_distance(std::string_view pred, std::string_view gold, Dimension d);
int rank_distance(std::size_t pred, std::size_t gold, Dimension d);

double mean_distance(std::span<const std::string> predictions, std::span<const std::string> golds,
                     Dimension d);
// mean_distance divided by the dimension's label count.
double normalized_mean_distance(std::span<const std::string> predictions,
                                std::span<const std::string> golds, Dimension d);

// Index of the largest entry; ties go to the lower index.
std::size_t argmax_index(std::span<const double> probs);

struct DimensionReport {
  Dimension dimension = Dimension::kDuration;
  std::size_t count = 0;
  std::optional<double> mean_distance;  // absent for hierarchy
  std::optional<double> normalized;
  double accuracy = 0.0;  // top prediction equals gold
};

// One report per dimension present in `instances`, in dimension order.
std::vector<DimensionReport> evaluate(const ModelParams& params, const Vocabulary& vocab,
                                      const std::vector<EvalInstance>& instances);

// Columns: dimension,count,mean_distance,normalized,accuracy@0.
void write_report_csv(std::ostream& out, const std::vector<DimensionReport>& reports);

// Records use the tuple field names: event_tokens, verb_index, dimension and
// gold (or value). '#' lines are skipped.
std::vector<EvalInstance> read_eval_instances(std::istream& in);
void write_eval_instances(std::ostream& out, const std::vector<EvalInstance>& instances);

struct PredictionQuery {
  std::string id;
  std::vector<std::string> event_tokens;
  std::size_t verb_index = 0;
  std::vector<Dimension> dimensions;
};

// Lines carry event_tokens, verb_index and either "dimensions" (array) or
// "dimension"; "id" defaults to the 0-based record ordinal.
std::vector<PredictionQuery> read_prediction_queries(std::istream& in);

// Rows event_id,dimension,label,probability; one block per (event,
// dimension) in input order.
void emit_distribution_csv(std::ostream& out, const ModelParams& params, const Vocabulary& vocab,
                           const std::vector<PredictionQuery>& queries);

}  // namespace tcs
