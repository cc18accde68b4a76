#include "tcs/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

#include "tcs/error.hpp"
#include "text_util.hpp"

namespace tcs {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorKind::kConfig, "invalid value for " + key + ": '" + value + "'");
}

template <typename T>
T parse_int(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) bad_value(key, value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = detail::to_lower(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  bad_value(key, value);
}

// Shortest text that parses back to the same double.
std::string real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto size = [](std::size_t PipelineConfig::*field) {
      return [field](PipelineConfig& c, const std::string& k, const std::string& v) {
        c.*field = parse_int<std::size_t>(k, v);
      };
    };
    t["input"] = [](PipelineConfig& c, const std::string&, const std::string& v) { c.input = v; };
    t["output"] = [](PipelineConfig& c, const std::string&, const std::string& v) { c.output = v; };
    t["seed"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.seed = parse_int<std::uint64_t>(k, v);
    };
    t["workers"] = size(&PipelineConfig::workers);
    t["min_count"] = size(&PipelineConfig::min_count);
    t["format"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      try {
        c.format = parse_dataset_format(v);
      } catch (const Error&) {
        bad_value(k, v);
      }
    };
    t["p_mask"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.dataset.masking.p_mask = parse_real(k, v);
    };
    t["p_dim"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.dataset.masking.p_dim = parse_real(k, v);
    };
    t["p_event"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.dataset.masking.p_event = parse_real(k, v);
    };
    t["am"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.all_event_masking = parse_bool(k, v);
    };
    t["ms"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.dataset.masking.multi_sentence = parse_bool(k, v);
    };
    t["norm_mode"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      try {
        c.dataset.norm_mode = parse_normalization_mode(v);
      } catch (const Error&) {
        bad_value(k, v);
      }
    };
    t["balance"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.dataset.balance = parse_bool(k, v);
    };
    t["weight_adjust"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.dataset.weight_adjust = parse_bool(k, v);
    };
    t["max_len"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.dataset.max_length = parse_int<std::size_t>(k, v);
      c.train.shape.max_len = c.dataset.max_length;
    };
    t["dim"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.train.shape.dim = parse_int<std::size_t>(k, v);
    };
    t["layers"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.train.shape.layers = parse_int<std::size_t>(k, v);
    };
    t["heads"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.train.shape.heads = parse_int<std::size_t>(k, v);
    };
    t["ffn"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.train.shape.ffn = parse_int<std::size_t>(k, v);
    };
    t["lr"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.train.learning_rate = parse_real(k, v);
    };
    t["beta1"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.train.beta1 = parse_real(k, v);
    };
    t["beta2"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.train.beta2 = parse_real(k, v);
    };
    t["eps"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.train.epsilon = parse_real(k, v);
    };
    t["batch_size"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.train.batch_size = parse_int<std::size_t>(k, v);
    };
    t["epochs"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.train.epochs = parse_int<std::size_t>(k, v);
    };
    t["init_std"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.train.init_std = parse_real(k, v);
    };
    t["hard_values"] = [](PipelineConfig& c, const std::string& k, const std::string& v) {
      c.train.hard_values = parse_bool(k, v);
    };
    t["divergence_threshold"] = [](PipelineConfig& c, const std::string& k,
                                   const std::string& v) {
      c.train.divergence_threshold = parse_real(k, v);
    };
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
  }();
  return keys;
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  auto it = setters().find(key);
  if (it == setters().end()) throw Error(ErrorKind::kConfig, "unknown config key: " + key);
  it->second(cfg, key, value);
}

void apply_config_file(PipelineConfig& cfg, std::istream& in) {
  if (!in) throw Error(ErrorKind::kIo, "config stream is not readable");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfig, "config line " + std::to_string(line_no) + ": expected key=value");
    }
    set_config_value(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

void PipelineConfig::finalize() {
  if (all_event_masking) dataset.masking.p_event = kAllEventMaskingRate;
  if (workers == 0) throw Error(ErrorKind::kConfig, "workers must be at least 1");
  if (dataset.max_length < 8) throw Error(ErrorKind::kConfig, "max_len must be at least 8");
  dataset.masking.seed = seed;
  dataset.workers = workers;
  train.seed = seed;
  train.workers = workers;
  train.shape.max_len = dataset.max_length;
  dataset.masking.validate();
  train.validate();
  if (train.shape.dim % train.shape.heads != 0 || train.shape.heads == 0) {
    throw Error(ErrorKind::kConfig, "dim must be divisible by heads");
  }
}

std::vector<std::string> PipelineConfig::echo(EchoScope scope) const {
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  std::vector<std::string> out = {
      "seed=" + std::to_string(seed),
      "workers=" + std::to_string(workers),
  };
  const auto add = [&](std::initializer_list<std::string> lines) {
    out.insert(out.end(), lines);
  };
  if (scope != EchoScope::kTrain) {
    add({
        "min_count=" + std::to_string(min_count),
        std::string("format=") + (format == DatasetFormat::kJsonl ? "jsonl" : "binary"),
        "p_mask=" + real(dataset.masking.p_mask),
        "p_dim=" + real(dataset.masking.p_dim),
        "p_event=" + real(dataset.masking.p_event),
        "am=" + b(all_event_masking),
        "ms=" + b(dataset.masking.multi_sentence),
        "norm_mode=" + std::string(normalization_mode_name(dataset.norm_mode)),
        "balance=" + b(dataset.balance),
        "weight_adjust=" + b(dataset.weight_adjust),
    });
  }
  out.push_back("max_len=" + std::to_string(dataset.max_length));
  if (scope != EchoScope::kDataset) {
    add({
        "dim=" + std::to_string(train.shape.dim),
        "layers=" + std::to_string(train.shape.layers),
        "heads=" + std::to_string(train.shape.heads),
        "ffn=" + std::to_string(train.shape.ffn),
        "lr=" + real(train.learning_rate),
        "beta1=" + real(train.beta1),
        "beta2=" + real(train.beta2),
        "eps=" + real(train.epsilon),
        "batch_size=" + std::to_string(train.batch_size),
        "epochs=" + std::to_string(train.epochs),
        "init_std=" + real(train.init_std),
        "hard_values=" + b(train.hard_values),
        "divergence_threshold=" + real(train.divergence_threshold),
    });
  }
  return out;
}

}  // namespace tcs
