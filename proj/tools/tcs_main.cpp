// tcs: temporal-commonsense mining pipeline driver.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tcs/config.hpp"
#include "tcs/dataset.hpp"
#include "tcs/error.hpp"
#include "tcs/evaluation.hpp"
#include "tcs/extraction.hpp"
#include "tcs/model.hpp"
#include "tcs/srl.hpp"
#include "tcs/synthetic.hpp"
#include "tcs/targets.hpp"
#include "tcs/tuple_io.hpp"

namespace {

using namespace tcs;

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kConfigError = 3,
  kIoError = 4,
  kSchemaError = 5,
  kNumericError = 6,
  kInvalidArgumentError = 7,
  kCheckFailed = 8,
};

constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error\n"
    "  3  invalid configuration\n"
    "  4  missing or unreadable/unwritable file\n"
    "  5  schema violation in an input file\n"
    "  6  numeric failure (divergence, non-finite values)\n"
    "  7  invalid argument\n"
    "  8  grad-check tolerance exceeded\n"
    "Failures print one JSON object on stderr: {\"error\",\"exit_code\",\"message\"}.";

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return kConfigError;
    case ErrorKind::kIo: return kIoError;
    case ErrorKind::kSchema: return kSchemaError;
    case ErrorKind::kNumeric: return kNumericError;
    case ErrorKind::kInvalidArgument: return kInvalidArgumentError;
  }
  return kInternal;
}

int report_error(std::string_view kind, int code, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["exit_code"] = code;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
  return code;
}

// "-" means standard input / output.
class Input {
 public:
  explicit Input(const std::string& path, bool binary = false) {
    if (path == "-") {
      stream_ = &std::cin;
      return;
    }
    file_.open(path, binary ? std::ios::binary : std::ios::in);
    if (!file_) throw Error(ErrorKind::kIo, "cannot open " + path + " for reading");
    stream_ = &file_;
  }
  std::istream& get() { return *stream_; }

 private:
  std::ifstream file_;
  std::istream* stream_ = nullptr;
};

class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (path == "-") {
      stream_ = &std::cout;
      return;
    }
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw Error(ErrorKind::kIo, "cannot open " + path + " for writing");
    stream_ = &file_;
  }
  std::ostream& get() { return *stream_; }
  void close() {
    stream_->flush();
    if (!*stream_) throw Error(ErrorKind::kIo, "failed writing " + path_);
    if (file_.is_open()) file_.close();
  }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

// Options shared by the dataset and training stages. String-typed so the
// same parser handles the config file and the flags.
struct Overrides {
  std::string config_path;
  std::vector<std::pair<CLI::Option*, std::string>> values;
  std::vector<std::pair<std::string, std::string*>> keys;
  CLI::Option* am = nullptr;
  CLI::Option* ms = nullptr;
  std::vector<std::string> sets;

  void add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& help) {
    auto value = std::make_unique<std::string>();
    keys.emplace_back(key, value.get());
    values.emplace_back(app->add_option(flag, *value, help), key);
    storage.push_back(std::move(value));
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (!config_path.empty()) {
      Input in(config_path);
      apply_config_file(cfg, in.get());
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::kConfig, "--set expects key=value");
      set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i].first->count() > 0) set_config_value(cfg, values[i].second, *keys[i].second);
    }
    if (am && am->count() > 0) cfg.all_event_masking = true;
    if (ms && ms->count() > 0) cfg.dataset.masking.multi_sentence = true;
    cfg.finalize();
    return cfg;
  }

  std::vector<std::unique_ptr<std::string>> storage;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "Flat key=value config file");
  o.add(app, "--seed", "seed", "Master seed");
  o.add(app, "--workers", "workers", "Worker threads");
  app->add_option("--set", o.sets, "Override any config key (key=value), repeatable");
}

void add_masking(CLI::App* app, Overrides& o) {
  o.add(app, "--p-mask", "p_mask", "Probability of masking [Val]");
  o.add(app, "--p-dim", "p_dim", "Probability of masking [Dim]");
  o.add(app, "--p-event", "p_event", "Per-token event masking probability");
  o.am = app->add_flag("--am", "All-event masking (p_event = 0.6)");
  o.ms = app->add_flag("--ms", "Wrap events in their neighbouring sentences");
  o.add(app, "--norm-mode", "norm_mode", "Soft target normalization {normalize|softmax}");
  o.add(app, "--format", "format", "Dataset format {jsonl|binary}");
  o.add(app, "--min-count", "min_count", "Vocabulary frequency cutoff");
}

std::vector<std::string> with_command(const std::string& command,
                                      const std::vector<std::string>& lines) {
  std::vector<std::string> out = {"command=" + command};
  out.insert(out.end(), lines.begin(), lines.end());
  return out;
}

Vocabulary load_vocab(const std::string& path) {
  Input in(path);
  return Vocabulary::read_tsv(in.get());
}

ModelParams load_model(const std::string& path) {
  Input in(path, true);
  return load_checkpoint(in.get());
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

int run(int argc, char** argv) {
  CLI::App app{"Temporal commonsense mining: SRL extraction, soft-target datasets, toy encoder"};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);

  std::string input = "-", output = "-";
  auto io = [&](CLI::App* sub) {
    sub->add_option("--input", input, "Input path ('-' for stdin)");
    sub->add_option("--output", output, "Output path ('-' for stdout)");
  };

  // extract
  auto* extract = app.add_subcommand("extract", "SRL JSONL -> temporal tuples JSONL");
  io(extract);
  Overrides extract_o;
  add_common(extract, extract_o);

  // stats
  auto* stats = app.add_subcommand("stats", "Per-dimension tuple counts as CSV");
  io(stats);

  // build-dataset
  auto* build = app.add_subcommand("build-dataset", "Tuples -> masked training records");
  io(build);
  Overrides build_o;
  add_common(build, build_o);
  add_masking(build, build_o);
  std::string vocab_path, labels_path;
  build->add_option("--vocab", vocab_path, "Vocabulary TSV to write")->required();
  build->add_option("--labels", labels_path, "Label manifest to write");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the toy encoder on a dataset");
  io(train_cmd);
  Overrides train_o;
  add_common(train_cmd, train_o);
  train_o.add(train_cmd, "--epochs", "epochs", "Training epochs");
  std::string train_vocab, log_path, heldout_path;
  train_cmd->add_option("--vocab", train_vocab, "Vocabulary TSV")->required();
  train_cmd->add_option("--log", log_path, "Loss log CSV (epoch,split,loss,mean_distance)");
  train_cmd->add_option("--eval", heldout_path, "Held-out instances for per-epoch scoring");

  // eval
  auto* eval = app.add_subcommand("eval", "Per-dimension rank-distance report");
  io(eval);
  std::string eval_ckpt, eval_vocab;
  eval->add_option("--checkpoint", eval_ckpt, "Model checkpoint")->required();
  eval->add_option("--vocab", eval_vocab, "Vocabulary TSV")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Predicted value distributions as CSV");
  io(predict);
  std::string pred_ckpt, pred_vocab;
  predict->add_option("--checkpoint", pred_ckpt, "Model checkpoint")->required();
  predict->add_option("--vocab", pred_vocab, "Vocabulary TSV")->required();

  // grad-check
  auto* grad = app.add_subcommand("grad-check", "Analytic vs finite-difference gradients");
  grad->add_option("--output", output, "Report CSV path ('-' for stdout)");
  std::uint64_t grad_seed = 0;
  std::size_t grad_configs = 3, grad_coords = 100;
  double grad_tol = 1e-4;
  grad->add_option("--seed", grad_seed, "Seed");
  grad->add_option("--configs", grad_configs, "Random encoder configurations");
  grad->add_option("--coords", grad_coords, "Coordinates per configuration");
  grad->add_option("--tolerance", grad_tol, "Maximum relative error");

  // dump-target
  auto* dump = app.add_subcommand("dump-target", "Soft target vector as CSV");
  std::string dump_dim, dump_gold, dump_mode = "normalize";
  dump->add_option("dimension", dump_dim, "Dimension name")->required();
  dump->add_option("gold", dump_gold, "Gold label")->required();
  dump->add_option("--norm-mode", dump_mode, "normalize|softmax");
  dump->add_option("--output", output, "Output path ('-' for stdout)");

  // labels
  auto* labels = app.add_subcommand("labels", "Label manifest of every dimension");
  labels->add_option("--output", output, "Output path ('-' for stdout)");

  // make-planted
  auto* planted = app.add_subcommand("make-planted", "Planted-rule synthetic tuples");
  planted->add_option("--output", output, "Training tuples JSONL");
  std::string planted_eval;
  PlantedOptions popt;
  planted->add_option("--eval", planted_eval, "Held-out instances JSONL")->required();
  planted->add_option("--seed", popt.seed, "Seed");
  planted->add_option("--tuples", popt.train_tuples, "Training tuples");
  planted->add_option("--heldout-per-verb", popt.heldout_per_verb, "Held-out events per verb");
  planted->add_option("--noise", popt.neighbour_noise, "Neighbour-label noise rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", kUsage, e.what());
  }

  if (*extract) {
    const PipelineConfig cfg = extract_o.resolve();
    Input in(input);
    IngestStats ingest;
    const auto sentences = read_corpus(in.get(), &ingest);
    for (const auto& issue : ingest.issues) {
      nlohmann::ordered_json j;
      j["warning"] = "skipped record";
      j["line"] = issue.line;
      j["message"] = issue.message;
      std::cerr << j.dump() << '\n';
    }
    const auto tuples = extract_corpus(sentences, cfg.workers);
    Output out(output);
    write_comment_header(out.get(), {"command=extract", "records=" + std::to_string(ingest.records),
                                     "skipped=" + std::to_string(ingest.skipped),
                                     "tuples=" + std::to_string(tuples.size())});
    write_tuples(out.get(), tuples);
    out.close();
  } else if (*stats) {
    Input in(input);
    const auto tuples = read_tuples(in.get());
    DimensionCounts counts;
    for (const auto& t : tuples) ++counts[t.dimension];
    Output out(output);
    out.get() << "dimension,count\n";
    for (Dimension d : kAllDimensions) {
      out.get() << dimension_name(d) << ',' << (counts.count(d) ? counts.at(d) : 0) << '\n';
    }
    out.get() << "total," << tuples.size() << '\n';
    out.close();
  } else if (*build) {
    const PipelineConfig cfg = build_o.resolve();
    Input in(input);
    const auto tuples = read_tuples(in.get());
    const Vocabulary vocab = Vocabulary::build(tuples, cfg.min_count);
    DatasetSummary summary;
    const auto records = build_dataset(tuples, vocab, cfg.dataset, &summary);
    auto header = with_command("build-dataset", cfg.echo(EchoScope::kDataset));
    header.push_back("input_tuples=" + std::to_string(summary.input_tuples));
    header.push_back("retained_tuples=" + std::to_string(summary.retained_tuples));
    header.push_back("vocab_size=" + std::to_string(vocab.size()));
    Output out(output);
    write_dataset(out.get(), records, cfg.format, header);
    out.close();
    Output vout(vocab_path);
    vocab.write_tsv(vout.get());
    vout.close();
    if (!labels_path.empty()) {
      Output lout(labels_path);
      lout.get() << label_manifest();
      lout.close();
    }
    nlohmann::ordered_json j;
    j["records"] = summary.tally.records;
    j["val_masked"] = summary.tally.val_masked;
    j["dim_masked"] = summary.tally.dim_masked;
    j["event_masked"] = summary.tally.event_masked;
    std::cerr << j.dump() << '\n';
  } else if (*train_cmd) {
    const PipelineConfig cfg = train_o.resolve();
    const Vocabulary vocab = load_vocab(train_vocab);
    std::vector<TrainingRecord> records;
    {
      Input in(input, true);
      records = read_dataset(in.get());
    }
    std::vector<EvalInstance> heldout;
    if (!heldout_path.empty()) {
      Input in(heldout_path);
      heldout = read_eval_instances(in.get());
    }
    const TrainResult result = train(records, vocab, cfg.train, heldout);
    if (output == "-") throw Error(ErrorKind::kInvalidArgument, "train needs --output for the checkpoint");
    Output out(output);
    save_checkpoint(out.get(), result.params);
    out.close();
    if (!log_path.empty()) {
      Output log(log_path);
      write_comment_header(log.get(), with_command("train", cfg.echo(EchoScope::kTrain)));
      write_loss_log(log.get(), result.log);
      log.close();
    }
  } else if (*eval) {
    const ModelParams params = load_model(eval_ckpt);
    const Vocabulary vocab = load_vocab(eval_vocab);
    Input in(input);
    const auto instances = read_eval_instances(in.get());
    Output out(output);
    write_report_csv(out.get(), evaluate(params, vocab, instances));
    out.close();
  } else if (*predict) {
    const ModelParams params = load_model(pred_ckpt);
    const Vocabulary vocab = load_vocab(pred_vocab);
    Input in(input);
    const auto queries = read_prediction_queries(in.get());
    Output out(output);
    emit_distribution_csv(out.get(), params, vocab, queries);
    out.close();
  } else if (*grad) {
    const auto cases = run_gradient_suite(grad_seed, grad_configs, grad_coords);
    Output out(output);
    out.get() << "config,dim,layers,heads,ffn,records,coordinates,max_relative_error,"
                 "mean_relative_error,worst_block\n";
    bool ok = true;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const auto& c = cases[i];
      ok = ok && c.result.max_relative_error < grad_tol;
      out.get() << i << ',' << c.shape.dim << ',' << c.shape.layers << ',' << c.shape.heads << ','
                << c.shape.ffn << ',' << c.records << ',' << c.result.coordinates << ','
                << fmt("%.3e", c.result.max_relative_error) << ','
                << fmt("%.3e", c.result.mean_relative_error) << ',' << c.result.worst_block << '\n';
    }
    out.close();
    if (!ok) return report_error("check_failed", kCheckFailed, "relative error above tolerance");
  } else if (*dump) {
    const Dimension d = require_dimension(dump_dim);
    const SoftTarget t = build_soft_target(d, dump_gold, parse_normalization_mode(dump_mode));
    const LabelSpace& space = label_space(d);
    Output out(output);
    out.get() << "label,probability\n";
    for (std::size_t i = 0; i < t.probs.size(); ++i) {
      out.get() << space.label(i) << ',' << fmt("%.12g", t.probs[i]) << '\n';
    }
    out.close();
  } else if (*labels) {
    Output out(output);
    out.get() << label_manifest();
    out.close();
  } else if (*planted) {
    const PlantedCorpus corpus = make_planted_corpus(popt);
    Output out(output);
    write_tuples(out.get(), corpus.train);
    out.close();
    Output eout(planted_eval);
    write_eval_instances(eout.get(), corpus.heldout);
    eout.close();
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const tcs::Error& e) {
    return report_error(tcs::error_kind_name(e.kind()), exit_code_for(e.kind()), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", kInternal, e.what());
  }
}
