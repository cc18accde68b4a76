#pragma once

// Tuple -> TrainingRecord pipeline and the on-disk dataset formats.
//
// JSON Lines: '#' header lines, then one object per record:
//   {"dimension":"duration","weight":1.0,"val_pos":9,"input_ids":[...],
//    "mask_positions":[...],"targets":[{"id":N} | {"id":N,"soft":[...]}]}
//
// Binary (little-endian):
//   "TCSDATA1" | u32 header_bytes | header text | u64 record_count |
//   per record: u32 payload_bytes | payload
//   payload: u8 dimension | f64 weight | u32 val_pos | u32 n_ids | i32 ids... |
//            u32 n_masks | per mask: u32 pos, i32 id, u32 n_soft, f64 soft...

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "tcs/sequence.hpp"

namespace tcs {

enum class DatasetFormat : std::uint8_t { kJsonl, kBinary };

DatasetFormat parse_dataset_format(std::string_view name);

struct DatasetOptions {
  MaskingConfig masking;
  NormalizationMode norm_mode = NormalizationMode::kNormalize;
  bool balance = true;        // per-dimension down-sampling
  bool weight_adjust = true;  // label-balance instance weights
  std::size_t max_length = kMaxSequenceLength;
  std::size_t workers = 1;
};

struct DatasetSummary {
  std::size_t input_tuples = 0;
  std::size_t retained_tuples = 0;
  MaskingTally tally;
};

// Down-samples (seeded by masking.seed), weighs labels within each
// dimension over the retained tuples, then builds and masks one record per
// retained tuple. Record i uses masking_stream(seed, i), so the output does
// not depend on `workers`.
std::vector<TrainingRecord> build_dataset(const std::vector<TemporalTuple>& tuples,
                                          const Vocabulary& vocab, const DatasetOptions& options,
                                          DatasetSummary* summary = nullptr);

void write_dataset(std::ostream& out, const std::vector<TrainingRecord>& records,
                   DatasetFormat format, const std::vector<std::string>& header = {});

// Detects the format from the first bytes. Throws Error(kSchema) on
// malformed input.
std::vector<TrainingRecord> read_dataset(std::istream& in);

}  // namespace tcs
