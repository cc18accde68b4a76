#include <doctest.h>

#include <cmath>
#include <sstream>

#include "tcs/dataset.hpp"
#include "tcs/error.hpp"
#include "tcs/evaluation.hpp"
#include "tcs/model.hpp"
#include "tcs/synthetic.hpp"

using namespace tcs;

namespace {

ModelShape small_shape(std::size_t vocab) {
  ModelShape s;
  s.vocab = vocab;
  s.dim = 12;
  s.heads = 2;
  s.layers = 2;
  s.ffn = 24;
  s.max_len = 24;
  return s;
}

struct Fixture {
  PlantedCorpus corpus;
  Vocabulary vocab;
  std::vector<TrainingRecord> records;

  explicit Fixture(std::size_t n, std::uint64_t seed = 3) {
    PlantedOptions po;
    po.train_tuples = n;
    po.seed = seed;
    corpus = make_planted_corpus(po);
    vocab = Vocabulary::build(corpus.train);
    DatasetOptions opt;
    opt.balance = false;
    opt.masking.seed = seed;
    opt.masking.p_dim = 0.3;
    opt.masking.p_event = 0.3;
    records = build_dataset(corpus.train, vocab, opt);
  }
};

// -sum_j y_j log softmax(z)_j, term by term.
double naive_ce(const std::vector<double>& z, const std::vector<double>& y) {
  long double mx = z[0];
  for (double v : z) mx = std::max<long double>(mx, v);
  long double denom = 0;
  for (double v : z) denom += std::exp((long double)v - mx);
  long double loss = 0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    loss -= y[j] * (((long double)z[j] - mx) - std::log(denom));
  }
  return static_cast<double>(loss);
}

}  // namespace

TEST_CASE("soft cross-entropy against a naive oracle") {
  Rng rng = make_stream(1, "test");
  const std::size_t rows = 5, v = 17;
  RowMatrix logits(rows, v), targets(rows, v);
  std::vector<double> weights(rows);
  double expected = 0.0, wsum = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> z(v), y(v);
    double ysum = 0;
    for (std::size_t j = 0; j < v; ++j) {
      z[j] = 3.0 * standard_normal(rng);
      y[j] = uniform01(rng);
      ysum += y[j];
    }
    for (auto& e : y) e /= ysum;
    for (std::size_t j = 0; j < v; ++j) logits(r, j) = z[j], targets(r, j) = y[j];
    weights[r] = 0.1 + uniform01(rng);
    expected += weights[r] * naive_ce(z, y);
    wsum += weights[r];
  }
  CHECK(std::abs(soft_ce_loss(logits, targets, weights) - expected / wsum) <= 1e-10);

  // Uniform logits with a one-hot target.
  RowMatrix flat = RowMatrix::Constant(1, v, 0.7);
  RowMatrix onehot = RowMatrix::Zero(1, v);
  onehot(0, 4) = 1.0;
  const std::vector<double> one = {1.0};
  CHECK(soft_ce_loss(flat, onehot, one) == doctest::Approx(std::log(double(v))).epsilon(1e-14));

  // Target equal to softmax(logits) gives the entropy.
  RowMatrix z = logits.topRows(1);
  RowMatrix p = (z.array() - z.maxCoeff()).exp();
  p /= p.sum();
  const double entropy = -(p.array() * p.array().log()).sum();
  CHECK(soft_ce_loss(z, p, one) == doctest::Approx(entropy).epsilon(1e-12));
  RowMatrix shifted = z.array() + 0.5;
  CHECK(soft_ce_loss(shifted, p, one) == doctest::Approx(entropy).epsilon(1e-12));

  RowMatrix bad = onehot * 0.9;
  CHECK_THROWS_AS(soft_ce_loss(flat, bad, one), Error);
}

TEST_CASE("forward shape and symmetry") {
  Fixture f(48);
  ModelParams params = ModelParams::initialize(small_shape(f.vocab.size()), 1, 0.1);
  const TokenId id = f.vocab.word_id("slept");
  CHECK(forward(params, std::vector<TokenId>{id}).rows() == 1);
  CHECK(forward(params, std::vector<TokenId>{id}).cols() == (long)f.vocab.size());

  params.block(params.block_index("position_embedding")).setZero();
  const RowMatrix out = forward(params, std::vector<TokenId>(6, id));
  for (long r = 1; r < out.rows(); ++r) {
    CHECK((out.row(r) - out.row(0)).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(forward(params, std::vector<TokenId>{(TokenId)f.vocab.size()}), Error);
  CHECK_THROWS_AS(forward(params, std::vector<TokenId>(25, id)), Error);
}

TEST_CASE("fixed seed gives bit-identical parameters and logits") {
  Fixture f(48);
  const ModelParams a = ModelParams::initialize(small_shape(f.vocab.size()), 4, 0.1);
  const ModelParams b = ModelParams::initialize(small_shape(f.vocab.size()), 4, 0.1);
  CHECK(a.values() == b.values());
  const auto& ids = f.records[0].input_ids;
  CHECK(forward(a, ids) == forward(b, ids));
  const ModelParams c = ModelParams::initialize(small_shape(f.vocab.size()), 5, 0.1);
  CHECK(a.values() != c.values());
}

TEST_CASE("gradient at the logits is w/W (softmax - y)") {
  Fixture f(48);
  const ModelParams params = ModelParams::initialize(small_shape(f.vocab.size()), 2, 0.2);
  std::vector<TrainingRecord> batch(f.records.begin(), f.records.begin() + 6);
  batch[1].weight = 2.5;
  std::vector<double> grad;
  const BatchResult res = loss_and_gradient(params, batch, f.vocab, grad);
  REQUIRE(grad.size() == params.values().size());

  // The output bias gradient is the sum of the logit gradients over slots.
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(f.vocab.size());
  double wsum = 0.0;
  for (const auto& r : batch) wsum += r.weight * r.mask_positions.size();
  CHECK(res.weight_sum == doctest::Approx(wsum));
  for (const auto& r : batch) {
    const RowMatrix logits = forward(params, r.input_ids);
    for (std::size_t k = 0; k < r.mask_positions.size(); ++k) {
      Eigen::VectorXd z = logits.row(r.mask_positions[k]).transpose();
      Eigen::VectorXd p = (z.array() - z.maxCoeff()).exp();
      p /= p.sum();
      expected += (r.weight / wsum) * (p - dense_target(r, k, f.vocab));
    }
  }
  const std::size_t ob = params.block_index("output_bias");
  const auto& blk = params.layout()[ob];
  for (std::size_t j = 0; j < f.vocab.size(); ++j) {
    CHECK(std::abs(grad[blk.offset + j] - expected[j]) < 1e-12);
  }
}

TEST_CASE("zero-weight instance contributes nothing") {
  Fixture f(48);
  const ModelParams params = ModelParams::initialize(small_shape(f.vocab.size()), 2, 0.2);
  std::vector<TrainingRecord> base(f.records.begin(), f.records.begin() + 3);
  std::vector<TrainingRecord> extra = base;
  extra.push_back(f.records[5]);
  extra.back().weight = 0.0;
  std::vector<double> g1, g2;
  const double l1 = loss_and_gradient(params, base, f.vocab, g1).loss;
  const double l2 = loss_and_gradient(params, extra, f.vocab, g2).loss;
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-13));
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(std::abs(g1[i] - g2[i]) < 1e-14);
}

TEST_CASE("finite-difference gradient check") {
  Fixture f(48);
  std::vector<TrainingRecord> batch;
  for (const auto& r : f.records) {
    if (!r.mask_positions.empty() && batch.size() < 3) batch.push_back(r);
  }
  for (bool hard : {false, true}) {
    const ModelParams params = ModelParams::initialize(small_shape(f.vocab.size()), 8, 0.3);
    const GradCheckResult res = check_gradients(params, batch, f.vocab, 60, 8, 1e-4, hard);
    CAPTURE(res.worst_block);
    CHECK(res.coordinates == 60);
    CHECK(res.max_relative_error < 1e-4);
  }
}

TEST_CASE("training lowers the loss and is reproducible") {
  Fixture f(100);
  TrainConfig cfg;
  cfg.shape = small_shape(0);
  cfg.epochs = 20;
  cfg.batch_size = 16;
  cfg.learning_rate = 3e-3;
  cfg.seed = 6;
  const TrainResult a = train(f.records, f.vocab, cfg);
  REQUIRE(a.log.size() == 20);
  for (const auto& row : a.log) CHECK(std::isfinite(row.loss));
  CHECK(a.log.back().loss < a.log.front().loss);

  const TrainResult b = train(f.records, f.vocab, cfg);
  CHECK(a.params.values() == b.params.values());
  std::ostringstream la, lb;
  write_loss_log(la, a.log);
  write_loss_log(lb, b.log);
  CHECK(la.str() == lb.str());

  cfg.workers = 3;
  cfg.epochs = 2;
  const TrainResult c1 = train(f.records, f.vocab, cfg);
  const TrainResult c2 = train(f.records, f.vocab, cfg);
  CHECK(c1.params.values() == c2.params.values());

  CHECK_THROWS_AS(train({}, f.vocab, cfg), Error);
}

TEST_CASE("divergence aborts training") {
  Fixture f(48);
  TrainConfig cfg;
  cfg.shape = small_shape(0);
  cfg.epochs = 3;
  cfg.divergence_threshold = 0.5;  // below ln V, so the first batch trips it
  try {
    train(f.records, f.vocab, cfg);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
  }
}

TEST_CASE("value distribution") {
  Fixture f(48);
  ModelParams params = ModelParams::initialize(small_shape(f.vocab.size()), 2, 0.2);
  const std::vector<std::string> ev = {"he", "slept", "alone"};
  const auto dur = predict_value_distribution(params, f.vocab, ev, 1, Dimension::kDuration);
  const auto week = predict_value_distribution(params, f.vocab, ev, 1, Dimension::kTypicalWeek);
  CHECK(dur.size() == 9);
  CHECK(week.size() == 7);
  double s = 0;
  for (double p : dur) s += p;
  CHECK(std::abs(s - 1.0) < 1e-12);

  // Adding a constant to every logit leaves the distribution unchanged.
  params.block(params.block_index("output_bias")).array() += 3.25;
  const auto shifted = predict_value_distribution(params, f.vocab, ev, 1, Dimension::kDuration);
  for (std::size_t i = 0; i < dur.size(); ++i) CHECK(std::abs(shifted[i] - dur[i]) < 1e-12);
}

TEST_CASE("checkpoint round trip") {
  Fixture f(48);
  const ModelParams params = ModelParams::initialize(small_shape(f.vocab.size()), 2, 0.2);
  std::stringstream buf;
  save_checkpoint(buf, params);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 8) == "TCSMODEL");
  CHECK(bytes.size() == 8 + 4 + 24 + 4 * params.values().size());
  const ModelParams back = load_checkpoint(buf);
  CHECK(back.shape() == params.shape());
  for (std::size_t i = 0; i < params.values().size(); ++i) {
    CHECK(back.values()[i] == static_cast<double>(static_cast<float>(params.values()[i])));
  }
  std::stringstream again;
  save_checkpoint(again, back);
  CHECK(again.str() == bytes);

  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_checkpoint(truncated), Error);
  std::istringstream trailing(bytes + "x");
  CHECK_THROWS_AS(load_checkpoint(trailing), Error);
  std::istringstream wrong("NOTMODEL");
  CHECK_THROWS_AS(load_checkpoint(wrong), Error);
}
