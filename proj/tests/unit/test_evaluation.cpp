#include <doctest.h>

#include <sstream>

#include "tcs/error.hpp"
#include "tcs/evaluation.hpp"
#include "tcs/synthetic.hpp"

using namespace tcs;

TEST_CASE("rank distance examples") {
  CHECK(rank_distance("january", "december", Dimension::kTypicalMonth) == 1);
  CHECK(rank_distance("day", "day", Dimension::kDuration) == 0);
  CHECK(rank_distance("minute", "year", Dimension::kFrequency) == 5);
  CHECK(rank_distance("winter", "summer", Dimension::kTypicalSeason) == 2);
  CHECK_FALSE(has_rank_distance(Dimension::kHierarchy));
  CHECK_THROWS_AS(rank_distance("before", "after", Dimension::kHierarchy), Error);
}

TEST_CASE("mean and normalized distance") {
  const std::vector<std::string> gold = {"day", "day"};
  CHECK(mean_distance(gold, gold, Dimension::kDuration) == 0.0);
  const std::vector<std::string> pred = {"hour", "year"};
  CHECK(mean_distance(pred, gold, Dimension::kDuration) == 2.0);
  CHECK(normalized_mean_distance(pred, gold, Dimension::kDuration) == doctest::Approx(2.0 / 9.0));
  const std::vector<std::string> one = {"day"};
  CHECK_THROWS_AS(mean_distance(one, gold, Dimension::kDuration), Error);
}

TEST_CASE("uniform predictor on the week ring") {
  const auto& labels = label_space(Dimension::kTypicalWeek).labels();
  std::vector<std::string> pred, gold;
  for (const auto& p : labels) {
    for (const auto& g : labels) pred.push_back(p), gold.push_back(g);
  }
  CHECK(pred.size() == 49);
  // Per gold: distances 0,1,1,2,2,3,3 -> 12 over 7 predictions.
  CHECK(mean_distance(pred, gold, Dimension::kTypicalWeek) == doctest::Approx(12.0 / 7.0));
}

TEST_CASE("argmax ties go low") {
  const std::vector<double> p = {0.2, 0.4, 0.4};
  CHECK(argmax_index(p) == 1);
}

TEST_CASE("unimodality") {
  CHECK(is_unimodal({0.1, 0.6, 0.2, 0.1}, Dimension::kTypicalSeason));
  CHECK_FALSE(is_unimodal({0.4, 0.1, 0.4, 0.1}, Dimension::kTypicalSeason));
  std::vector<double> tail(9, 0.0);
  tail[3] = 0.9;
  tail[2] = 0.05;
  tail[8] = 0.05;
  CHECK_FALSE(is_unimodal(tail, Dimension::kDuration));
  CHECK(unimodality_violation(tail, Dimension::kDuration) == doctest::Approx(0.05));
  CHECK(is_unimodal(tail, Dimension::kDuration, 0.05));
  // December peak, mass on both ring neighbours.
  std::vector<double> dec(12, 0.01);
  dec[11] = 0.6;
  dec[0] = 0.2;
  dec[10] = 0.1;
  CHECK(is_unimodal(dec, Dimension::kTypicalMonth));
}

TEST_CASE("distribution dump and reports") {
  PlantedOptions po;
  po.train_tuples = 48;
  const PlantedCorpus corpus = make_planted_corpus(po);
  const Vocabulary vocab = Vocabulary::build(corpus.train);
  ModelShape shape;
  shape.vocab = vocab.size();
  shape.dim = 8;
  shape.heads = 2;
  shape.layers = 1;
  shape.ffn = 16;
  const ModelParams params = ModelParams::initialize(shape, 1, 0.1);

  std::istringstream q(
      R"({"id":"a","event_tokens":["he","slept"],"verb_index":1,"dimensions":["duration","typical_week"]})"
      "\n"
      R"({"event_tokens":["she","swam"],"verb_index":1,"dimensions":["typical_season","frequency"]})"
      "\n");
  const auto queries = read_prediction_queries(q);
  REQUIRE(queries.size() == 2);
  CHECK(queries[1].id == "1");
  std::ostringstream out;
  emit_distribution_csv(out, params, vocab, queries);
  std::istringstream rows(out.str());
  std::string line;
  std::getline(rows, line);
  CHECK(line == "event_id,dimension,label,probability");
  std::vector<std::string> blocks;
  std::size_t n = 0;
  while (std::getline(rows, line)) {
    const std::string key = line.substr(0, line.find(',', line.find(',') + 1));
    if (blocks.empty() || blocks.back() != key) blocks.push_back(key);
    ++n;
  }
  CHECK(n == 9 + 7 + 4 + 9);
  CHECK(blocks == std::vector<std::string>{"a,duration", "a,typical_week", "1,typical_season",
                                           "1,frequency"});

  std::stringstream ev;
  write_eval_instances(ev, corpus.heldout);
  const auto back = read_eval_instances(ev);
  REQUIRE(back.size() == corpus.heldout.size());
  const auto reports = evaluate(params, vocab, back);
  std::size_t total = 0;
  for (const auto& r : reports) {
    total += r.count;
    if (r.dimension != Dimension::kHierarchy) CHECK(r.mean_distance.has_value());
  }
  CHECK(total == corpus.heldout.size());
}

TEST_CASE("planted corpus shape") {
  PlantedOptions po;
  po.train_tuples = 6000;
  po.seed = 4;
  const PlantedCorpus c = make_planted_corpus(po);
  CHECK(planted_verbs().size() == 24);
  CHECK(c.train.size() == 6000);
  CHECK(c.heldout.size() == 24 * 8);
  // Held-out events never appear in training.
  for (const auto& h : c.heldout) {
    for (const auto& t : c.train) CHECK_FALSE(t.event_tokens == h.event_tokens);
  }
  std::size_t planted = 0;
  for (std::size_t i = 0; i < c.train.size(); ++i) {
    planted += c.train[i].value == planted_verbs()[i % 24].label;
  }
  const double rate = double(planted) / 6000.0;
  CHECK(rate > 0.77);
  CHECK(rate < 0.83);
}
