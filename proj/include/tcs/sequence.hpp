#pragma once

// Token vocabulary with the reserved special block, the training sequence
// template and the masking scheme.
//
//   W1 .. [Vrb] Wverb .. Wn [SEP] [Vrb] [Dim] [Val] [Arg-Tmp-Event...]

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tcs/extraction.hpp"
#include "tcs/rng.hpp"
#include "tcs/targets.hpp"

namespace tcs {

using TokenId = std::int32_t;

inline constexpr std::size_t kMaxSequenceLength = 128;

// Word ids are [0, base_size); id 0 is [UNK]. The special block sits on top:
// [MASK], [SEP], [Vrb], one [Dim:d] per dimension, then one [Val:d:v] per
// (dimension, label) in dimension order.
class Vocabulary {
 public:
  // Words are lower-cased; words seen fewer than `min_count` times map to
  // [UNK]. Ordering is by descending count, then lexicographic.
  static Vocabulary build(const std::vector<TemporalTuple>& tuples, std::size_t min_count = 1);
  static Vocabulary from_words(std::vector<std::string> words);

  static Vocabulary read_tsv(std::istream& in);
  void write_tsv(std::ostream& out) const;

  std::size_t size() const { return tokens_.size(); }
  std::size_t base_size() const { return base_size_; }

  TokenId word_id(std::string_view word) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  TokenId unk_id() const { return 0; }
  TokenId mask_id() const { return special_begin(); }
  TokenId sep_id() const { return special_begin() + 1; }
  TokenId verb_marker_id() const { return special_begin() + 2; }
  TokenId dim_id(Dimension d) const {
    return special_begin() + 3 + static_cast<TokenId>(dimension_index(d));
  }
  // Ids of one dimension's labels are contiguous: value_id(d, 0) + i.
  TokenId value_id(Dimension d, std::size_t label_index) const;
  bool is_special(TokenId id) const { return id >= special_begin(); }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  TokenId special_begin() const { return static_cast<TokenId>(base_size_); }
  void index();

  std::vector<std::string> tokens_;
  std::size_t base_size_ = 0;
  std::unordered_map<std::string, TokenId> lookup_;
  std::array<TokenId, kNumDimensions> value_block_{};
};

std::string value_token_name(Dimension d, std::string_view label);

struct Sequence {
  std::vector<TokenId> ids;
  std::vector<std::size_t> event_positions;  // event-sentence words, markers excluded
  std::size_t verb_pos = 0;
  std::size_t dim_pos = 0;
  std::size_t val_pos = 0;
  Dimension dimension = Dimension::kDuration;
  std::size_t value_index = 0;
};

// With `multi_sentence`, the tuple's neighbour sentences wrap the event
// sentence. Over-long inputs lose context first, then the event words
// farthest from the verb. Throws Error(kInvalidArgument) on empty events.
Sequence build_sequence(const TemporalTuple& tuple, const Vocabulary& vocab,
                        bool multi_sentence = false,
                        std::size_t max_length = kMaxSequenceLength);

// Event query with the value slot left for prediction.
Sequence build_query_sequence(const std::vector<std::string>& event_tokens,
                              std::size_t verb_index, Dimension dimension,
                              const Vocabulary& vocab,
                              std::size_t max_length = kMaxSequenceLength);

struct MaskingConfig {
  double p_mask = 0.6;
  double p_dim = 0.1;
  double p_event = 0.15;
  bool multi_sentence = false;
  std::uint64_t seed = 0;

  // Throws Error(kConfig) when a probability leaves [0, 1].
  void validate() const;
};

inline constexpr double kAllEventMaskingRate = 0.6;

// Target of one masked slot. `token` is the original id; the [Val] slot also
// carries a distribution over its dimension's value block.
struct SlotTarget {
  TokenId token = -1;
  std::vector<double> soft;  // empty for hard targets

  bool is_soft() const { return !soft.empty(); }
  bool operator==(const SlotTarget&) const = default;
};

struct TrainingRecord {
  std::vector<TokenId> input_ids;
  std::vector<std::size_t> mask_positions;
  std::vector<SlotTarget> targets;  // aligned with mask_positions
  double weight = 1.0;
  Dimension dimension = Dimension::kDuration;
  std::size_t val_pos = 0;

  bool operator==(const TrainingRecord&) const = default;
};

enum class RecoveryBranch : std::uint8_t { kMaskToken, kKeep, kRandom };

// Counters for checking empirical masking rates.
struct MaskingTally {
  std::uint64_t records = 0;
  std::uint64_t val_masked = 0;
  std::uint64_t dim_masked = 0;
  std::uint64_t event_gate_open = 0;  // records where neither [Val] nor [Dim] fired
  std::uint64_t event_candidates = 0;  // event words of gate-open records
  std::uint64_t event_masked = 0;
  std::array<std::uint64_t, 3> branch{};  // indexed by RecoveryBranch

  void merge(const MaskingTally& other);
};

// Draw order per record: [Val] gate, [Dim] gate, then (only if both missed)
// one gate per event word; each masked slot then draws its recovery branch
// (80% [MASK], 10% unchanged, 10% random word id).
TrainingRecord apply_masking(const Sequence& sequence, double weight, const MaskingConfig& cfg,
                             NormalizationMode mode, const Vocabulary& vocab, Rng& rng,
                             MaskingTally* tally = nullptr);

// Masking stream of record `ordinal`.
inline Rng masking_stream(std::uint64_t seed, std::uint64_t ordinal) {
  return make_stream(seed, "masking", ordinal);
}

// Puts every original id back into its masked slot.
std::vector<TokenId> unmask(const TrainingRecord& record);

}  // namespace tcs
