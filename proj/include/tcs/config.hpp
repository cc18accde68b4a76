#pragma once

// Pipeline configuration: a flat key=value file plus command-line
// overrides. Flags always win over the file.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "tcs/dataset.hpp"
#include "tcs/model.hpp"

namespace tcs {

// Which knobs echo() lists: dataset building, training, or both.
enum class EchoScope { kAll, kDataset, kTrain };

struct PipelineConfig {
  std::string input;
  std::string output;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t min_count = 1;  // vocabulary cutoff
  DatasetFormat format = DatasetFormat::kJsonl;
  bool all_event_masking = false;  // forces p_event to 0.6
  DatasetOptions dataset;
  TrainConfig train;

  // Seed and worker count propagated into the stage configs; call after
  // every override has been applied. Throws Error(kConfig).
  void finalize();

  // "key=value" lines for the knobs in `scope`; paths are never echoed.
  std::vector<std::string> echo(EchoScope scope = EchoScope::kAll) const;
};

// Keys accepted in files and by set_config_value().
const std::vector<std::string>& config_keys();

// Throws Error(kConfig) for unknown keys or unparsable values.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

// '#' comments and blank lines are ignored; everything else must be
// key=value with a known key.
void apply_config_file(PipelineConfig& cfg, std::istream& in);

}  // namespace tcs
