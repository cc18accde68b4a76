#pragma once

// Desk-scale masked-token encoder trained with the soft cross-entropy
// objective. Post-LN transformer blocks, GELU feed-forward, output
// projection tied to the token embeddings plus an output bias.
//
// All parameters live in one flat buffer; each named block is a row-major
// matrix view into it. That buffer is what the optimizer steps, the
// gradient checker perturbs and the checkpoint stores.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcs/sequence.hpp"

namespace tcs {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;

struct ModelShape {
  std::size_t vocab = 0;
  std::size_t dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t max_len = kMaxSequenceLength;
  std::size_t ffn = 256;

  bool operator==(const ModelShape&) const = default;
  // Throws Error(kConfig) for zero sizes or dim not divisible by heads.
  void validate() const;
};

struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

// Block order: token_embedding, position_embedding, then per layer
// q/k/v/o weights and biases, ln1 gain/bias, ffn in/out weights and biases,
// ln2 gain/bias; finally output_bias.
std::vector<ParamBlock> parameter_layout(const ModelShape& shape);

class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(const ModelShape& shape);  // zero-filled

  // Weights ~ N(0, init_std), layer-norm gains 1, biases 0; drawn from the
  // "init" stream of `seed`.
  static ModelParams initialize(const ModelShape& shape, std::uint64_t seed,
                                double init_std = 0.02);

  const ModelShape& shape() const { return shape_; }
  const std::vector<ParamBlock>& layout() const { return layout_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  MatrixView block(std::size_t index);
  ConstMatrixView block(std::size_t index) const;
  std::size_t block_index(const std::string& name) const;

 private:
  ModelShape shape_;
  std::vector<ParamBlock> layout_;
  std::vector<double> values_;
};

// Logits (length x vocab) for one sequence. Throws Error(kInvalidArgument)
// for ids outside the vocabulary or sequences longer than max_len.
RowMatrix forward(const ModelParams& params, std::span<const TokenId> ids);

// Weighted mean of per-row cross-entropies against dense target rows:
// sum_p w_p * CE(targets_p, softmax(logits_p)) / sum_p w_p (0 if all weights
// are 0). Throws Error(kInvalidArgument) if any target row does not sum to 1
// within 1e-6.
double soft_ce_loss(const RowMatrix& logits, const RowMatrix& targets,
                    std::span<const double> weights);

// Dense full-vocabulary target for one masked slot: the soft value target
// scattered onto its [Val] block, or a one-hot row on the original id.
Eigen::VectorXd dense_target(const TrainingRecord& record, std::size_t slot,
                             const Vocabulary& vocab, bool hard_values = false);

struct BatchResult {
  double loss = 0.0;
  double weight_sum = 0.0;
  std::size_t positions = 0;
};

// Objective over all masked slots of `batch` and its exact gradient with
// respect to every parameter (same layout as params.values()). With
// hard_values the [Val] slots use a one-hot target on the gold label.
// Throws Error(kNumeric) when an intermediate becomes non-finite.
BatchResult loss_and_gradient(const ModelParams& params, std::span<const TrainingRecord> batch,
                              const Vocabulary& vocab, std::vector<double>& gradient,
                              bool hard_values = false);

// Objective only (used by the finite-difference checker).
double batch_loss(const ModelParams& params, std::span<const TrainingRecord> batch,
                  const Vocabulary& vocab, bool hard_values = false);

struct GradCheckResult {
  std::size_t coordinates = 0;
  double max_relative_error = 0.0;
  double mean_relative_error = 0.0;
  std::string worst_block;
};

// Central differences on `coordinates` parameter indices drawn from the
// "gradcheck" stream; relative error |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult check_gradients(const ModelParams& params, std::span<const TrainingRecord> batch,
                                const Vocabulary& vocab, std::size_t coordinates,
                                std::uint64_t seed, double step = 1e-4,
                                bool hard_values = false);

struct TrainConfig {
  ModelShape shape;  // vocab is filled from the vocabulary
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  double init_std = 0.02;
  // Number of threads sharing each batch. Slices are fixed per worker count
  // and reduced in worker order, so results only depend on this value.
  std::size_t workers = 1;
  bool hard_values = false;  // one-hot [Val] targets instead of soft ones
  double divergence_threshold = 1e3;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::string split;
  double loss = 0.0;
  double mean_distance = 0.0;  // NaN when no ordinal slots were scored
};

struct EvalInstance;

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

// Adam over shuffled mini-batches ("shuffle" stream, one ordinal per epoch).
// The per-epoch train row reports the mean batch loss and the rank distance
// of the [Val] argmax over masked ordinal slots; a held-out row is added
// when `heldout` is non-empty. Throws Error(kInvalidArgument) on an empty
// dataset and Error(kNumeric) on divergence.
TrainResult train(const std::vector<TrainingRecord>& dataset, const Vocabulary& vocab,
                  const TrainConfig& config, const std::vector<EvalInstance>& heldout = {});

void write_loss_log(std::ostream& out, const std::vector<EpochLog>& log);

// Softmax over the dimension's [Val] block at the masked value slot.
std::vector<double> predict_value_distribution(const ModelParams& params,
                                               const Vocabulary& vocab,
                                               const std::vector<std::string>& event_tokens,
                                               std::size_t verb_index, Dimension dimension);

// "TCSMODEL" | u32 version | u32 vocab, dim, layers, heads, max_len, ffn |
// every block in layout order as row-major little-endian float32.
void save_checkpoint(std::ostream& out, const ModelParams& params);
ModelParams load_checkpoint(std::istream& in);

}  // namespace tcs
