// Acceptance harness: one PASS/FAIL line per criterion (and per clause where a
// criterion has several). Exit status is non-zero when any clause fails,
// except clauses named with --known-failure, which still print FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "tcs/dataset.hpp"
#include "tcs/evaluation.hpp"
#include "tcs/extraction.hpp"
#include "tcs/label_space.hpp"
#include "tcs/model.hpp"
#include "tcs/srl.hpp"
#include "tcs/synthetic.hpp"
#include "tcs/targets.hpp"

using namespace tcs;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Report {
  std::set<std::string> known;
  int unexpected = 0;

  void line(const std::string& id, bool pass, const std::string& what, const std::string& detail) {
    std::string tag = pass ? "PASS" : "FAIL";
    if (!pass && known.count(id)) tag += " (known)";
    std::cout << "AC" << id << ' ' << tag << "  " << what << "  [" << detail << "]" << std::endl;
    if (!pass && !known.count(id)) ++unexpected;
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

// --- 1 ---------------------------------------------------------------------
void unit_math(Report& r) {
  const double m = logsec(DurationUnit::kMinute);
  const DurationUnit u = nearest_unit(604800.0 / 4.0);
  r.line("1", std::abs(m - 4.094) <= 0.001 && u == DurationUnit::kDay,
         "logsec(minute) = 4.094 +- 0.001; nearest_unit(604800/4) = day",
         "logsec(minute)=" + fmt("%.6f", m) + " nearest=" + std::string(unit_name(u)));
}

// --- 2 ---------------------------------------------------------------------
void circular_metric(Report& r) {
  const LabelSpace& month = label_space(Dimension::kTypicalMonth);
  const int jd = circular_distance("january", "december", month);
  std::size_t mismatches = 0;
  for (std::size_t a = 0; a < 12; ++a) {
    for (std::size_t b = 0; b < 12; ++b) {
      int fwd = 0, back = 0;
      for (std::size_t i = a; i != b; i = (i + 1) % 12) ++fwd;
      for (std::size_t i = a; i != b; i = (i + 11) % 12) ++back;
      const int got = rank_distance(month.label(a), month.label(b), Dimension::kTypicalMonth);
      mismatches += got != std::min(fwd, back);
    }
  }
  r.line("2", jd == 1 && mismatches == 0,
         "distance(January, December) = 1; 12x12 matrix equals both-directions oracle",
         "jan-dec=" + std::to_string(jd) + " mismatches=" + std::to_string(mismatches) + "/144");
}

// --- 3 ---------------------------------------------------------------------
void soft_targets(Report& r) {
  const auto t0 = Clock::now();
  const long double secs[] = {1, 60, 3600, 86400, 604800, 2592000, 31536000, 315360000,
                              3153600000.0L};
  const long double pi = 3.141592653589793238462643383279L;
  std::size_t pairs = 0, failures = 0;
  double worst_sum = 0.0, worst_oracle = 0.0;
  for (NormalizationMode mode : {NormalizationMode::kNormalize, NormalizationMode::kSoftmax}) {
    for (Dimension d : kAllDimensions) {
      const LabelSpace& s = label_space(d);
      const std::size_t n = s.size();
      for (std::size_t g = 0; g < n; ++g) {
        ++pairs;
        const auto p = build_soft_target(d, g, mode).probs;
        double sum = 0.0;
        for (double v : p) sum += v;
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        bool ok = std::abs(sum - 1.0) <= 1e-9 && argmax_index(p) == g;
        for (std::size_t i = 0; i < n; ++i) ok = ok && (i == g || p[i] < p[g]);
        if (s.topology() == Topology::kCategorical) {
          failures += !ok;
          continue;
        }
        // Naive density evaluation.
        std::vector<long double> dens(n), dist(n);
        long double total = 0;
        for (std::size_t i = 0; i < n; ++i) {
          long double sigma;
          if (s.topology() == Topology::kLogLinear) {
            dist[i] = std::abs(std::log(secs[i]) - std::log(secs[g]));
            sigma = 4;
          } else {
            long double fwd = 0, back = 0;
            for (std::size_t k = i; k != g; k = (k + 1) % n) ++fwd;
            for (std::size_t k = i; k != g; k = (k + n - 1) % n) ++back;
            dist[i] = std::min(fwd, back);
            sigma = 0.5L;
          }
          dens[i] = std::exp(-dist[i] * dist[i] / (2 * sigma * sigma)) / (sigma * std::sqrt(2 * pi));
          if (mode == NormalizationMode::kSoftmax) dens[i] = std::exp(dens[i]);
          total += dens[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double err = std::abs(p[i] - static_cast<double>(dens[i] / total));
          worst_oracle = std::max(worst_oracle, err);
          ok = ok && err <= 1e-10;
          for (std::size_t j = 0; j < n; ++j) {
            if (dist[i] < dist[j]) ok = ok && p[i] >= p[j];  // non-increasing with distance
            if (s.topology() == Topology::kCircular && dist[i] == dist[j]) {
              ok = ok && std::abs(p[i] - p[j]) <= 1e-15;  // mirror symmetry
            }
          }
        }
        failures += !ok;
      }
    }
  }
  const double secs_taken = seconds_since(t0);
  r.line("3", failures == 0 && secs_taken < 1.0,
         "soft targets: sum 1 +- 1e-9, argmax = gold, non-increasing with distance, circular symmetry, oracle 1e-10",
         std::to_string(pairs - failures) + "/" + std::to_string(pairs) + " (dimension, gold, mode) ok;" +
             " max|sum-1|=" + fmt("%.1e", worst_sum) + " max oracle err=" + fmt("%.1e", worst_oracle) +
             " time=" + fmt("%.3f", secs_taken) + "s");
}

// --- 4 ---------------------------------------------------------------------
void gradients(Report& r) {
  const auto t0 = Clock::now();
  const std::size_t configs = 3, coords = 100;
  const auto cases = run_gradient_suite(20240, configs, coords);
  double worst = 0.0;
  std::size_t total = 0;
  std::string shapes;
  for (const auto& c : cases) {
    worst = std::max(worst, c.result.max_relative_error);
    total += c.result.coordinates;
    shapes += " D" + std::to_string(c.shape.dim) + "/L" + std::to_string(c.shape.layers) + "/H" +
              std::to_string(c.shape.heads);
  }
  const double t = seconds_since(t0);
  r.line("4", cases.size() >= 3 && total >= 300 && worst < 1e-4 && t < 120.0,
         "analytic vs central-difference gradients, relative error < 1e-4",
         std::to_string(cases.size()) + " configs (" + shapes.substr(1) + ") x " +
             std::to_string(coords) + " coords; max rel err=" + fmt("%.2e", worst) +
             " time=" + fmt("%.1f", t) + "s");
}

// --- 5 ---------------------------------------------------------------------
void extraction_fidelity(Report& r, const fs::path& work) {
  const fs::path data = TCS_TEST_DATA_DIR;
  const fs::path out = work / "fixture_tuples.jsonl";
  const int rc = run(std::string(TCS_CLI_PATH) + " extract --input " +
                     quote(data / "fixture_corpus.jsonl") + " --output " + quote(out) +
                     " 2>/dev/null");
  const bool identical = rc == 0 && read_file(out) == read_file(data / "fixture_tuples.golden.jsonl");

  // Precision and recall against the hand-derived table.
  std::ifstream in(data / "fixture_corpus.jsonl");
  const auto tuples = extract_corpus(read_corpus(in));
  std::multiset<std::string> got, want;
  for (const auto& t : tuples) {
    std::string key = std::to_string(t.provenance.sent_index) + "\t" +
                      std::to_string(t.provenance.frame) + "\t" +
                      std::string(dimension_name(t.dimension)) + "\t" + t.value + "\t" +
                      std::to_string(t.verb_index) + "\t";
    for (std::size_t i = 0; i < t.event_tokens.size(); ++i) key += (i ? " " : "") + t.event_tokens[i];
    key += "\t";
    for (std::size_t i = 0; i < t.arg_tmp_event_tokens.size(); ++i) {
      key += (i ? " " : "") + t.arg_tmp_event_tokens[i];
    }
    got.insert(key);
  }
  std::ifstream tsv(data / "fixture_expected.tsv");
  for (std::string line; std::getline(tsv, line);) {
    if (!line.empty() && line[0] != '#') want.insert(line);
  }
  std::size_t hit = 0;
  for (const auto& k : got) hit += want.count(k) > 0;
  const double precision = got.empty() ? 0.0 : double(hit) / double(got.size());
  const double recall = want.empty() ? 0.0 : double(hit) / double(want.size());
  r.line("5", identical && precision == 1.0 && recall == 1.0,
         "fixture extraction byte-identical to golden; precision = recall = 1.0",
         std::string("byte-identical=") + (identical ? "yes" : "no") + " precision=" +
             fmt("%.3f", precision) + " recall=" + fmt("%.3f", recall) + " tuples=" +
             std::to_string(got.size()));
}

// --- 6 ---------------------------------------------------------------------
void masking_statistics(Report& r) {
  const auto t0 = Clock::now();
  PlantedOptions po;
  po.train_tuples = 100000;
  po.seed = 6;
  const PlantedCorpus corpus = make_planted_corpus(po);
  const Vocabulary vocab = Vocabulary::build(corpus.train);
  DatasetOptions opt;
  opt.balance = false;
  opt.masking.p_mask = 0.6;
  opt.masking.p_dim = 0.1;
  opt.masking.p_event = 0.15;
  opt.masking.seed = 6;
  DatasetSummary summary;
  build_dataset(corpus.train, vocab, opt, &summary);
  const MaskingTally& t = summary.tally;
  const double n = double(t.records);
  const double val = double(t.val_masked) / n;
  const double dim = double(t.dim_masked) / n;
  const double ev = double(t.event_masked) / double(t.event_candidates);
  const double slots = double(t.branch[0] + t.branch[1] + t.branch[2]);
  const double b0 = double(t.branch[0]) / slots, b1 = double(t.branch[1]) / slots,
               b2 = double(t.branch[2]) / slots;
  const double time = seconds_since(t0);
  r.line("6a", t.records == 100000 && std::abs(val - 0.6) <= 0.01 && std::abs(dim - 0.1) <= 0.01 &&
                   std::abs(ev - 0.15) <= 0.01 && time < 60.0,
         "masking rates within +-0.01 of (p_mask, p_dim, p_event) = (0.6, 0.1, 0.15)",
         "records=" + std::to_string(t.records) + " val=" + fmt("%.4f", val) + " dim=" +
             fmt("%.4f", dim) + " event|gate-open=" + fmt("%.4f", ev) + " time=" + fmt("%.1f", time) + "s");
  r.line("6b", std::abs(b0 - 0.8) <= 0.01 && std::abs(b1 - 0.1) <= 0.01 && std::abs(b2 - 0.1) <= 0.01,
         "recovery split within +-0.01 of (0.8, 0.1, 0.1) among masked slots",
         "mask=" + fmt("%.4f", b0) + " keep=" + fmt("%.4f", b1) + " random=" + fmt("%.4f", b2) +
             " slots=" + std::to_string(std::size_t(slots)));
}

// --- 7 ---------------------------------------------------------------------
void balancing(Report& r) {
  using D = Dimension;
  std::vector<Dimension> dims;
  const std::pair<D, std::size_t> counts[] = {
      {D::kDuration, 30000}, {D::kUpperBound, 10000}, {D::kTypicalWeek, 20000}, {D::kFrequency, 1000}};
  for (const auto& [d, c] : counts) dims.insert(dims.end(), c, d);
  const auto kept = balanced_indices(dims, 7);
  std::map<D, std::size_t> after;
  for (auto i : kept) ++after[dims[i]];
  // Non-frequency dimensions should each land near the smallest of them (10k).
  bool ok = after[D::kFrequency] == 1000;
  std::string detail;
  for (D d : {D::kDuration, D::kUpperBound, D::kTypicalWeek}) {
    ok = ok && std::abs(double(after[d]) - 10000.0) <= 1000.0;
    detail += std::string(dimension_name(d)) + "=" + std::to_string(after[d]) + " ";
  }
  detail += "frequency=" + std::to_string(after[D::kFrequency]);
  r.line("7", ok, "balancing: non-frequency counts within +-10% of the smallest (10k), frequency untouched",
         detail);
}

// --- 8 ---------------------------------------------------------------------
struct PlantedRun {
  double mean_distance = 0.0;
  std::size_t strict_unimodal = 0;
  std::size_t tolerant_unimodal = 0;
  std::size_t mode_near_gold = 0;
  double worst_violation = 0.0;
  std::size_t events = 0;
};

// Rises below this size (one percentage point) are read as noise in the tail.
constexpr double kUnimodalTolerance = 0.01;

PlantedRun planted_run(const PlantedCorpus& corpus, const Vocabulary& vocab,
                       const std::vector<TrainingRecord>& records, bool hard, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.epochs = 8;
  cfg.hard_values = hard;
  const TrainResult res = train(records, vocab, cfg);
  PlantedRun out;
  double total = 0.0;
  for (const auto& inst : corpus.heldout) {
    const auto p = predict_value_distribution(res.params, vocab, inst.event_tokens, inst.verb_index,
                                              inst.dimension);
    const LabelSpace& s = label_space(inst.dimension);
    const std::size_t pred = argmax_index(p);
    const int dist = rank_distance(pred, s.require_index(inst.gold), inst.dimension);
    total += dist;
    const double v = unimodality_violation(p, inst.dimension);
    out.worst_violation = std::max(out.worst_violation, v);
    out.strict_unimodal += v == 0.0;
    out.tolerant_unimodal += v <= kUnimodalTolerance;
    out.mode_near_gold += dist <= 1;
    ++out.events;
  }
  out.mean_distance = total / double(out.events);
  return out;
}

void mechanism(Report& r) {
  const auto t0 = Clock::now();
  const std::uint64_t seed = 1;
  PlantedOptions po;
  po.seed = seed;
  const PlantedCorpus corpus = make_planted_corpus(po);
  const Vocabulary vocab = Vocabulary::build(corpus.train);
  DatasetOptions opt;
  opt.balance = false;
  opt.weight_adjust = false;
  opt.masking.seed = seed;
  const auto records = build_dataset(corpus.train, vocab, opt);

  const PlantedRun soft = planted_run(corpus, vocab, records, false, seed);
  const PlantedRun hard = planted_run(corpus, vocab, records, true, seed);
  const double t = seconds_since(t0);
  const std::string setup = std::to_string(planted_verbs().size()) + " verbs, " +
                            std::to_string(corpus.train.size()) + " tuples, " +
                            std::to_string(soft.events) + " held-out events";
  r.line("8a", soft.mean_distance < 1.0 && t < 600.0, "soft-target held-out mean rank distance < 1.0",
         setup + "; soft=" + fmt("%.4f", soft.mean_distance) + " time=" + fmt("%.0f", t) + "s");
  r.line("8b", soft.mean_distance <= hard.mean_distance,
         "soft distance <= identically seeded hard one-hot run",
         "soft=" + fmt("%.4f", soft.mean_distance) + " hard=" + fmt("%.4f", hard.mean_distance));
  r.line("8c", soft.tolerant_unimodal == soft.events && soft.mode_near_gold == soft.events,
         "soft predictive distributions uni-modal (rises <= 0.01) with mode within 1 rank of the planted label",
         "tolerant " + std::to_string(soft.tolerant_unimodal) + "/" + std::to_string(soft.events) +
             ", strict " + std::to_string(soft.strict_unimodal) + "/" + std::to_string(soft.events) +
             ", worst rise " + fmt("%.4f", soft.worst_violation) + ", mode within 1: " +
             std::to_string(soft.mode_near_gold) + "; hard strict " +
             std::to_string(hard.strict_unimodal) + "/" + std::to_string(hard.events) +
             ", hard worst rise " + fmt("%.4f", hard.worst_violation));
}

// --- 9 ---------------------------------------------------------------------
void determinism(Report& r, const fs::path& work) {
  const std::string cli = TCS_CLI_PATH;
  const fs::path data = TCS_TEST_DATA_DIR;
  bool ok = true;
  std::string detail;
  auto check = [&](const std::string& name, const fs::path& a, const fs::path& b) {
    const std::string x = read_file(a), y = read_file(b);
    const bool same = !x.empty() && x == y;
    ok = ok && same;
    detail += name + (same ? "=same " : "=DIFFERENT ");
  };
  for (int i = 0; i < 2; ++i) {
    const fs::path d = work / ("det" + std::to_string(i));
    fs::create_directories(d);
    int rc = run(cli + " extract --seed 3 --input " + quote(data / "fixture_corpus.jsonl") +
                 " --output " + quote(d / "tuples.jsonl") + " 2>/dev/null");
    rc |= run(cli + " make-planted --seed 3 --tuples 960 --output " + quote(d / "planted.jsonl") +
              " --eval " + quote(d / "heldout.jsonl"));
    rc |= run(cli + " build-dataset --seed 3 --input " + quote(d / "planted.jsonl") + " --output " +
              quote(d / "data.jsonl") + " --vocab " + quote(d / "vocab.tsv") + " 2>/dev/null");
    rc |= run(cli + " train --seed 3 --workers 1 --epochs 2 --set dim=16 --set heads=2 --set ffn=32" +
              " --input " + quote(d / "data.jsonl") + " --vocab " + quote(d / "vocab.tsv") +
              " --eval " + quote(d / "heldout.jsonl") + " --output " + quote(d / "model.bin") +
              " --log " + quote(d / "loss.csv"));
    if (rc != 0) {
      ok = false;
      detail += "run" + std::to_string(i) + " exit!=0 ";
    }
  }
  const fs::path a = work / "det0", b = work / "det1";
  check("extract", a / "tuples.jsonl", b / "tuples.jsonl");
  check("build-dataset", a / "data.jsonl", b / "data.jsonl");
  check("vocab", a / "vocab.tsv", b / "vocab.tsv");
  check("checkpoint", a / "model.bin", b / "model.bin");
  check("loss-log", a / "loss.csv", b / "loss.csv");
  r.line("9", ok, "extract, build-dataset and single-threaded train are byte-identical across runs",
         detail.substr(0, detail.size() - 1));
}

}  // namespace

int main(int argc, char** argv) {
  Report report;
  fs::path work = fs::temp_directory_path() / "tcs_acceptance";
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--workdir" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--known-failure" && i + 1 < argc) {
      report.known.insert(argv[++i]);
    } else if (a == "--only" && i + 1 < argc) {
      only.insert(argv[++i]);
    } else {
      std::cerr << "usage: tcs_acceptance [--workdir DIR] [--only N]... [--known-failure ID]...\n";
      return 2;
    }
  }
  fs::create_directories(work);
  auto want = [&](const std::string& n) { return only.empty() || only.count(n); };

  try {
    if (want("1")) unit_math(report);
    if (want("2")) circular_metric(report);
    if (want("3")) soft_targets(report);
    if (want("4")) gradients(report);
    if (want("5")) extraction_fidelity(report, work);
    if (want("6")) masking_statistics(report);
    if (want("7")) balancing(report);
    if (want("8")) mechanism(report);
    if (want("9")) determinism(report, work);
  } catch (const std::exception& e) {
    std::cout << "ERROR " << e.what() << std::endl;
    return 1;
  }
  for (const auto& k : report.known) std::cout << "known failure accepted: AC" << k << std::endl;
  return report.unexpected == 0 ? 0 : 1;
}
