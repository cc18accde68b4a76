#include "tcs/sequence.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "tcs/error.hpp"
#include "text_util.hpp"

namespace tcs {
namespace {

constexpr const char* kUnkToken = "[UNK]";

std::vector<std::string> special_tokens() {
  std::vector<std::string> out = {"[MASK]", "[SEP]", "[Vrb]"};
  for (Dimension d : kAllDimensions) out.push_back("[Dim:" + std::string(dimension_name(d)) + "]");
  for (Dimension d : kAllDimensions) {
    for (const auto& label : label_space(d).labels()) out.push_back(value_token_name(d, label));
  }
  return out;
}

struct Layout {
  std::vector<std::string> left;
  std::vector<std::string> event;
  std::vector<std::string> right;
  std::vector<std::string> tail;
  std::size_t verb = 0;  // into event
};

// Drops context, then event words farthest from the verb, until the whole
// sequence fits in `max_length`.
void fit(Layout& l, std::size_t max_length) {
  constexpr std::size_t kBlock = 4;  // [SEP] [Vrb] [Dim] [Val]
  if (max_length < kBlock + 2) {
    throw Error(ErrorKind::kInvalidArgument, "maximum sequence length too small");
  }
  if (kBlock + l.tail.size() + 2 > max_length) l.tail.resize(max_length - kBlock - 2);
  const std::size_t budget = max_length - kBlock - l.tail.size();

  while (l.event.size() + 1 > budget) {
    const std::size_t left_gap = l.verb;
    const std::size_t right_gap = l.event.size() - 1 - l.verb;
    if (left_gap > right_gap) {
      l.event.erase(l.event.begin());
      --l.verb;
    } else {
      l.event.pop_back();
    }
  }
  const std::size_t context_budget = budget - (l.event.size() + 1);
  while (l.left.size() + l.right.size() > context_budget) {
    if (l.left.size() > l.right.size()) {
      l.left.erase(l.left.begin());
    } else {
      l.right.pop_back();
    }
  }
}

Sequence assemble(Layout layout, Dimension dimension, std::size_t value_index, TokenId value_token,
                  const Vocabulary& vocab, std::size_t max_length) {
  if (layout.event.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "cannot build a sequence from empty event tokens");
  }
  if (layout.verb >= layout.event.size()) {
    throw Error(ErrorKind::kInvalidArgument, "verb index outside the event tokens");
  }
  fit(layout, max_length);

  Sequence seq;
  seq.dimension = dimension;
  seq.value_index = value_index;
  auto& ids = seq.ids;
  for (const auto& w : layout.left) ids.push_back(vocab.word_id(w));
  for (std::size_t i = 0; i < layout.event.size(); ++i) {
    if (i == layout.verb) ids.push_back(vocab.verb_marker_id());
    if (i == layout.verb) seq.verb_pos = ids.size();
    seq.event_positions.push_back(ids.size());
    ids.push_back(vocab.word_id(layout.event[i]));
  }
  for (const auto& w : layout.right) ids.push_back(vocab.word_id(w));
  ids.push_back(vocab.sep_id());
  ids.push_back(vocab.verb_marker_id());
  seq.dim_pos = ids.size();
  ids.push_back(vocab.dim_id(dimension));
  seq.val_pos = ids.size();
  ids.push_back(value_token);
  for (const auto& w : layout.tail) ids.push_back(vocab.word_id(w));
  return seq;
}

}  // namespace

std::string value_token_name(Dimension d, std::string_view label) {
  return "[Val:" + std::string(dimension_name(d)) + ":" + std::string(label) + "]";
}

Vocabulary Vocabulary::build(const std::vector<TemporalTuple>& tuples, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  auto count = [&](const std::vector<std::string>& words) {
    for (const auto& w : words) ++counts[detail::to_lower(w)];
  };
  for (const auto& t : tuples) {
    count(t.event_tokens);
    count(t.arg_tmp_event_tokens);
    if (t.left_context) count(*t.left_context);
    if (t.right_context) count(*t.right_context);
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  for (const auto& [w, c] : ranked) {
    if (c >= min_count && w != kUnkToken) words.push_back(w);
  }
  return from_words(std::move(words));
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  Vocabulary v;
  v.tokens_.push_back(kUnkToken);
  for (auto& w : words) v.tokens_.push_back(detail::to_lower(w));
  v.base_size_ = v.tokens_.size();
  for (auto& s : special_tokens()) v.tokens_.push_back(std::move(s));
  v.index();
  return v;
}

void Vocabulary::index() {
  lookup_.clear();
  for (std::size_t i = 0; i < base_size_; ++i) {
    if (!lookup_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error(ErrorKind::kSchema, "duplicate vocabulary word '" + tokens_[i] + "'");
    }
  }
  TokenId next = special_begin() + 3 + static_cast<TokenId>(kNumDimensions);
  for (Dimension d : kAllDimensions) {
    value_block_[dimension_index(d)] = next;
    next += static_cast<TokenId>(label_space(d).size());
  }
}

TokenId Vocabulary::word_id(std::string_view word) const {
  auto it = lookup_.find(detail::to_lower(word));
  return it == lookup_.end() ? unk_id() : it->second;
}

TokenId Vocabulary::value_id(Dimension d, std::size_t label_index) const {
  if (label_index >= label_space(d).size()) {
    throw Error(ErrorKind::kInvalidArgument, "label index out of range");
  }
  return value_block_[dimension_index(d)] + static_cast<TokenId>(label_index);
}

void Vocabulary::write_tsv(std::ostream& out) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
}

Vocabulary Vocabulary::read_tsv(std::istream& in) {
  if (!in) throw Error(ErrorKind::kIo, "vocabulary stream is not readable");
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || std::to_string(tokens.size()) != line.substr(tab + 1)) {
      throw Error(ErrorKind::kSchema,
                  "vocabulary line " + std::to_string(line_no) + ": expected token<TAB>" +
                      std::to_string(tokens.size()));
    }
    tokens.push_back(line.substr(0, tab));
  }
  const auto specials = special_tokens();
  if (tokens.size() < specials.size() + 1 || tokens[0] != kUnkToken ||
      !std::equal(specials.begin(), specials.end(), tokens.end() - static_cast<long>(specials.size()))) {
    throw Error(ErrorKind::kSchema, "vocabulary does not end with the expected special block");
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.base_size_ = v.tokens_.size() - specials.size();
  v.index();
  return v;
}

Sequence build_sequence(const TemporalTuple& tuple, const Vocabulary& vocab, bool multi_sentence,
                        std::size_t max_length) {
  const LabelSpace& space = label_space(tuple.dimension);
  const std::size_t value_index = space.require_index(tuple.value);
  Layout layout;
  layout.event = tuple.event_tokens;
  layout.verb = tuple.verb_index;
  layout.tail = tuple.arg_tmp_event_tokens;
  if (multi_sentence) {
    if (tuple.left_context) layout.left = *tuple.left_context;
    if (tuple.right_context) layout.right = *tuple.right_context;
  }
  return assemble(std::move(layout), tuple.dimension, value_index,
                  vocab.value_id(tuple.dimension, value_index), vocab, max_length);
}

Sequence build_query_sequence(const std::vector<std::string>& event_tokens, std::size_t verb_index,
                              Dimension dimension, const Vocabulary& vocab,
                              std::size_t max_length) {
  Layout layout;
  layout.event = event_tokens;
  layout.verb = verb_index;
  return assemble(std::move(layout), dimension, 0, vocab.mask_id(), vocab, max_length);
}

void MaskingConfig::validate() const {
  auto check = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::kConfig, std::string(name) + " must lie in [0, 1]");
    }
  };
  check(p_mask, "p_mask");
  check(p_dim, "p_dim");
  check(p_event, "p_event");
}

void MaskingTally::merge(const MaskingTally& o) {
  records += o.records;
  val_masked += o.val_masked;
  dim_masked += o.dim_masked;
  event_gate_open += o.event_gate_open;
  event_candidates += o.event_candidates;
  event_masked += o.event_masked;
  for (std::size_t i = 0; i < branch.size(); ++i) branch[i] += o.branch[i];
}

TrainingRecord apply_masking(const Sequence& seq, double weight, const MaskingConfig& cfg,
                             NormalizationMode mode, const Vocabulary& vocab, Rng& rng,
                             MaskingTally* tally) {
  TrainingRecord rec;
  rec.input_ids = seq.ids;
  rec.weight = weight;
  rec.dimension = seq.dimension;
  rec.val_pos = seq.val_pos;

  const bool mask_val = bernoulli(rng, cfg.p_mask);
  const bool mask_dim = bernoulli(rng, cfg.p_dim);
  std::vector<std::pair<std::size_t, SlotTarget>> slots;
  if (mask_dim) slots.push_back({seq.dim_pos, {seq.ids[seq.dim_pos], {}}});
  if (mask_val) {
    slots.push_back(
        {seq.val_pos, {seq.ids[seq.val_pos], build_soft_target(seq.dimension, seq.value_index, mode).probs}});
  }
  std::uint64_t event_masked = 0;
  if (!mask_val && !mask_dim) {
    for (std::size_t pos : seq.event_positions) {
      if (bernoulli(rng, cfg.p_event)) {
        slots.push_back({pos, {seq.ids[pos], {}}});
        ++event_masked;
      }
    }
  }
  std::sort(slots.begin(), slots.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  for (auto& [pos, target] : slots) {
    const double u = uniform01(rng);
    RecoveryBranch branch = RecoveryBranch::kMaskToken;
    if (u < 0.8) {
      rec.input_ids[pos] = vocab.mask_id();
    } else if (u < 0.9) {
      branch = RecoveryBranch::kKeep;
    } else {
      branch = RecoveryBranch::kRandom;
      rec.input_ids[pos] = static_cast<TokenId>(uniform_index(rng, vocab.base_size()));
    }
    if (tally) ++tally->branch[static_cast<std::size_t>(branch)];
    rec.mask_positions.push_back(pos);
    rec.targets.push_back(std::move(target));
  }

  if (tally) {
    ++tally->records;
    tally->val_masked += mask_val;
    tally->dim_masked += mask_dim;
    if (!mask_val && !mask_dim) {
      ++tally->event_gate_open;
      tally->event_candidates += seq.event_positions.size();
      tally->event_masked += event_masked;
    }
  }
  return rec;
}

std::vector<TokenId> unmask(const TrainingRecord& record) {
  std::vector<TokenId> ids = record.input_ids;
  for (std::size_t k = 0; k < record.mask_positions.size(); ++k) {
    ids[record.mask_positions[k]] = record.targets[k].token;
  }
  return ids;
}

}  // namespace tcs
