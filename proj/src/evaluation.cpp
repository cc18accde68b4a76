#include "tcs/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>

#include <json.hpp>

#include "tcs/error.hpp"

namespace tcs {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string format_probability(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void check_aligned(std::size_t a, std::size_t b) {
  if (a == 0) throw Error(ErrorKind::kInvalidArgument, "mean distance over an empty set");
  if (a != b) throw Error(ErrorKind::kInvalidArgument, "predictions and golds differ in length");
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_array()) {
    throw Error(ErrorKind::kSchema, std::string(field) + " must be an array of strings");
  }
  return it->get<std::vector<std::string>>();
}

}  // namespace

bool has_rank_distance(Dimension d) {
  return label_space(d).topology() != Topology::kCategorical;
}

int rank_distance(std::size_t pred, std::size_t gold, Dimension d) {
  const LabelSpace& space = label_space(d);
  if (pred >= space.size() || gold >= space.size()) {
    throw Error(ErrorKind::kInvalidArgument, "label index out of range");
  }
  switch (space.topology()) {
    case Topology::kLogLinear:
      return std::abs(static_cast<int>(pred) - static_cast<int>(gold));
    case Topology::kCircular:
      return circular_distance(pred, gold, space.size());
    case Topology::kCategorical:
      break;
  }
  throw Error(ErrorKind::kInvalidArgument,
              std::string(dimension_name(d)) + " has no rank distance");
}

int rank_distance(std::string_view pred, std::string_view gold, Dimension d) {
  if (!has_rank_distance(d)) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string(dimension_name(d)) + " has no rank distance");
  }
  const LabelSpace& space = label_space(d);
  return rank_distance(space.require_index(pred), space.require_index(gold), d);
}

double mean_distance(std::span<const std::string> predictions, std::span<const std::string> golds,
                     Dimension d) {
  check_aligned(predictions.size(), golds.size());
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    total += rank_distance(predictions[i], golds[i], d);
  }
  return total / static_cast<double>(predictions.size());
}

double normalized_mean_distance(std::span<const std::string> predictions,
                                std::span<const std::string> golds, Dimension d) {
  return mean_distance(predictions, golds, d) / static_cast<double>(label_space(d).size());
}

std::size_t argmax_index(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

std::vector<DimensionReport> evaluate(const ModelParams& params, const Vocabulary& vocab,
                                      const std::vector<EvalInstance>& instances) {
  std::map<Dimension, std::pair<std::vector<std::string>, std::vector<std::string>>> grouped;
  for (const auto& inst : instances) {
    const auto probs = predict_value_distribution(params, vocab, inst.event_tokens,
                                                  inst.verb_index, inst.dimension);
    const LabelSpace& space = label_space(inst.dimension);
    auto& [preds, golds] = grouped[inst.dimension];
    preds.push_back(space.label(argmax_index(probs)));
    golds.push_back(space.label(space.require_index(inst.gold)));
  }
  std::vector<DimensionReport> reports;
  for (const auto& [d, pg] : grouped) {
    const auto& [preds, golds] = pg;
    DimensionReport r;
    r.dimension = d;
    r.count = preds.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == golds[i];
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.count);
    if (has_rank_distance(d)) {
      r.mean_distance = mean_distance(preds, golds, d);
      r.normalized = *r.mean_distance / static_cast<double>(label_space(d).size());
    }
    reports.push_back(r);
  }
  return reports;
}

void write_report_csv(std::ostream& out, const std::vector<DimensionReport>& reports) {
  out << "dimension,count,mean_distance,normalized,accuracy@0\n";
  for (const auto& r : reports) {
    out << dimension_name(r.dimension) << ',' << r.count << ','
        << (r.mean_distance ? format_double(*r.mean_distance) : "") << ','
        << (r.normalized ? format_double(*r.normalized) : "") << ','
        << format_double(r.accuracy) << '\n';
  }
}

std::vector<EvalInstance> read_eval_instances(std::istream& in) {
  if (!in) throw Error(ErrorKind::kIo, "evaluation stream is not readable");
  std::vector<EvalInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    try {
      const auto j = nlohmann::json::parse(line);
      EvalInstance inst;
      inst.event_tokens = string_list(j, "event_tokens");
      inst.verb_index = j.at("verb_index").get<std::size_t>();
      inst.dimension = require_dimension(j.at("dimension").get<std::string>());
      inst.gold = j.contains("gold") ? j.at("gold").get<std::string>()
                                     : j.at("value").get<std::string>();
      const LabelSpace& space = label_space(inst.dimension);
      inst.gold = space.label(space.require_index(inst.gold));
      if (inst.verb_index >= inst.event_tokens.size()) {
        throw Error(ErrorKind::kSchema, "verb_index outside event_tokens");
      }
      out.push_back(std::move(inst));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kSchema, "eval line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::kSchema, "eval line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_eval_instances(std::ostream& out, const std::vector<EvalInstance>& instances) {
  for (const auto& inst : instances) {
    nlohmann::ordered_json j;
    j["event_tokens"] = inst.event_tokens;
    j["verb_index"] = inst.verb_index;
    j["dimension"] = std::string(dimension_name(inst.dimension));
    j["gold"] = inst.gold;
    out << j.dump() << '\n';
  }
}

std::vector<PredictionQuery> read_prediction_queries(std::istream& in) {
  if (!in) throw Error(ErrorKind::kIo, "query stream is not readable");
  std::vector<PredictionQuery> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PredictionQuery q;
      q.id = j.contains("id") ? (j.at("id").is_string() ? j.at("id").get<std::string>()
                                                        : j.at("id").dump())
                              : std::to_string(out.size());
      q.event_tokens = string_list(j, "event_tokens");
      q.verb_index = j.at("verb_index").get<std::size_t>();
      if (q.verb_index >= q.event_tokens.size()) {
        throw Error(ErrorKind::kSchema, "verb_index outside event_tokens");
      }
      if (j.contains("dimensions")) {
        for (const auto& d : j.at("dimensions")) {
          q.dimensions.push_back(require_dimension(d.get<std::string>()));
        }
      } else {
        q.dimensions.push_back(require_dimension(j.at("dimension").get<std::string>()));
      }
      out.push_back(std::move(q));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kSchema, "query line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::kSchema, "query line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void emit_distribution_csv(std::ostream& out, const ModelParams& params, const Vocabulary& vocab,
                           const std::vector<PredictionQuery>& queries) {
  out << "event_id,dimension,label,probability\n";
  for (const auto& q : queries) {
    for (Dimension d : q.dimensions) {
      const auto probs = predict_value_distribution(params, vocab, q.event_tokens, q.verb_index, d);
      const LabelSpace& space = label_space(d);
      for (std::size_t i = 0; i < probs.size(); ++i) {
        out << q.id << ',' << dimension_name(d) << ',' << space.label(i) << ','
            << format_probability(probs[i]) << '\n';
      }
    }
  }
}

}  // namespace tcs
