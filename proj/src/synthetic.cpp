#include "tcs/synthetic.hpp"

#include <algorithm>

#include "tcs/dataset.hpp"
#include "tcs/error.hpp"
#include "tcs/rng.hpp"

namespace tcs {
namespace {

const std::vector<std::vector<std::string>>& subjects() {
  static const std::vector<std::vector<std::string>> s = {
      {"he"},         {"she"},        {"they"},       {"the", "man"},
      {"the", "woman"}, {"my", "uncle"}, {"our", "team"}, {"the", "old", "farmer"},
  };
  return s;
}

const std::vector<std::vector<std::string>>& fillers() {
  static const std::vector<std::vector<std::string>> f = {
      {"quietly"},       {"at", "home"},        {"with", "friends"}, {"again"},
      {"in", "the", "city"}, {"as", "usual"}, {"near", "the", "river"}, {"alone"},
  };
  return f;
}

std::vector<std::string> event_of(std::size_t subject, const std::string& verb,
                                  std::size_t filler, std::size_t* verb_index) {
  std::vector<std::string> tokens = subjects()[subject];
  *verb_index = tokens.size();
  tokens.push_back(verb);
  for (const auto& w : fillers()[filler]) tokens.push_back(w);
  return tokens;
}

std::size_t neighbour(std::size_t index, const LabelSpace& space, Rng& rng) {
  const std::size_t n = space.size();
  const bool up = bernoulli(rng, 0.5);
  if (space.topology() == Topology::kCircular) return up ? (index + 1) % n : (index + n - 1) % n;
  if (index == 0) return 1;
  if (index + 1 == n) return index - 1;
  return up ? index + 1 : index - 1;
}

}  // namespace

const std::vector<PlantedVerb>& planted_verbs() {
  using D = Dimension;
  static const std::vector<PlantedVerb> verbs = {
      {"blinked", D::kDuration, "second"},     {"showered", D::kDuration, "minute"},
      {"slept", D::kDuration, "hour"},         {"travelled", D::kDuration, "day"},
      {"vacationed", D::kDuration, "week"},    {"renovated", D::kDuration, "month"},
      {"studied", D::kDuration, "year"},       {"reigned", D::kDuration, "decade"},
      {"endured", D::kDuration, "century"},    {"checked", D::kFrequency, "hour"},
      {"brushed", D::kFrequency, "day"},       {"shopped", D::kFrequency, "week"},
      {"paid", D::kFrequency, "month"},        {"voted", D::kFrequency, "year"},
      {"phoned", D::kUpperBound, "day"},       {"jogged", D::kTypicalDay, "morning"},
      {"lunched", D::kTypicalDay, "noon"},     {"dined", D::kTypicalDay, "evening"},
      {"worshipped", D::kTypicalWeek, "sunday"}, {"partied", D::kTypicalWeek, "saturday"},
      {"caroled", D::kTypicalMonth, "december"}, {"skied", D::kTypicalSeason, "winter"},
      {"swam", D::kTypicalSeason, "summer"},   {"harvested", D::kTypicalSeason, "fall"},
  };
  return verbs;
}

PlantedCorpus make_planted_corpus(const PlantedOptions& options) {
  if (!(options.neighbour_noise >= 0.0 && options.neighbour_noise <= 1.0)) {
    throw Error(ErrorKind::kConfig, "neighbour_noise must be in [0, 1]");
  }
  const std::size_t combos = subjects().size() * fillers().size();
  if (options.heldout_per_verb >= combos) {
    throw Error(ErrorKind::kConfig, "heldout_per_verb leaves no training combinations");
  }
  const auto& verbs = planted_verbs();
  Rng rng = make_stream(options.seed, "synthetic");

  // Per verb: shuffle the (subject, filler) grid; the first entries are held out.
  std::vector<std::vector<std::size_t>> grids(verbs.size());
  PlantedCorpus corpus;
  for (std::size_t v = 0; v < verbs.size(); ++v) {
    auto& grid = grids[v];
    grid.resize(combos);
    for (std::size_t i = 0; i < combos; ++i) grid[i] = i;
    for (std::size_t i = combos; i > 1; --i) std::swap(grid[i - 1], grid[uniform_index(rng, i)]);
    for (std::size_t h = 0; h < options.heldout_per_verb; ++h) {
      EvalInstance inst;
      inst.event_tokens = event_of(grid[h] / fillers().size(), verbs[v].verb,
                                   grid[h] % fillers().size(), &inst.verb_index);
      inst.dimension = verbs[v].dimension;
      inst.gold = verbs[v].label;
      corpus.heldout.push_back(std::move(inst));
    }
  }

  const std::size_t train_combos = combos - options.heldout_per_verb;
  for (std::size_t i = 0; i < options.train_tuples; ++i) {
    const std::size_t v = i % verbs.size();
    const std::size_t cell = grids[v][options.heldout_per_verb + uniform_index(rng, train_combos)];
    const LabelSpace& space = label_space(verbs[v].dimension);
    std::size_t label = space.require_index(verbs[v].label);
    if (bernoulli(rng, options.neighbour_noise)) label = neighbour(label, space, rng);

    TemporalTuple t;
    t.event_tokens = event_of(cell / fillers().size(), verbs[v].verb, cell % fillers().size(),
                              &t.verb_index);
    t.dimension = verbs[v].dimension;
    t.value = space.label(label);
    t.provenance = {"planted", i, 0};
    corpus.train.push_back(std::move(t));
  }
  return corpus;
}

double unimodality_violation(const std::vector<double>& probs, Dimension dimension) {
  const LabelSpace& space = label_space(dimension);
  if (probs.size() != space.size()) {
    throw Error(ErrorKind::kInvalidArgument, "distribution length differs from label count");
  }
  const std::size_t n = probs.size();
  const std::size_t peak = argmax_index(probs);
  double worst = 0.0;
  auto step = [&](std::size_t from, std::size_t to) {
    worst = std::max(worst, probs[to] - probs[from]);
  };
  if (space.topology() == Topology::kCircular) {
    // Walk each way round the ring up to the antipode.
    for (std::size_t k = 1; k <= n / 2; ++k) {
      step((peak + k - 1) % n, (peak + k) % n);
      step((peak + n - k + 1) % n, (peak + n - k) % n);
    }
    return worst;
  }
  for (std::size_t i = peak + 1; i < n; ++i) step(i - 1, i);
  for (std::size_t i = peak; i-- > 0;) step(i + 1, i);
  return worst;
}

std::vector<GradSuiteCase> run_gradient_suite(std::uint64_t seed, std::size_t configs,
                                              std::size_t coordinates) {
  Rng rng = make_stream(seed, "gradsuite");
  const std::size_t dims[] = {8, 12, 16};
  const std::size_t heads[] = {1, 2, 4};
  std::vector<GradSuiteCase> cases;
  for (std::size_t c = 0; c < configs; ++c) {
    PlantedOptions po;
    po.train_tuples = 48;
    po.seed = seed + c;
    const PlantedCorpus corpus = make_planted_corpus(po);
    const Vocabulary vocab = Vocabulary::build(corpus.train);
    DatasetOptions opt;
    opt.balance = false;
    opt.masking.p_mask = 0.8;
    opt.masking.p_dim = 0.3;
    opt.masking.p_event = 0.5;
    opt.masking.seed = seed + c;
    std::vector<TrainingRecord> batch;
    for (auto& r : build_dataset(corpus.train, vocab, opt)) {
      if (!r.mask_positions.empty() && batch.size() < 4) batch.push_back(std::move(r));
    }

    GradSuiteCase g;
    g.shape.vocab = vocab.size();
    g.shape.dim = dims[uniform_index(rng, 3)];
    g.shape.heads = heads[uniform_index(rng, 3)];
    g.shape.layers = 1 + uniform_index(rng, 2);
    g.shape.ffn = 2 * g.shape.dim;
    g.shape.max_len = 16;
    g.init_std = 0.3;
    g.records = batch.size();
    const ModelParams params = ModelParams::initialize(g.shape, seed + c, g.init_std);
    g.result = check_gradients(params, batch, vocab, coordinates, seed + c);
    cases.push_back(std::move(g));
  }
  return cases;
}

}  // namespace tcs
