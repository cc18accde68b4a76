#include "tcs/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>
#include <thread>

#include "tcs/error.hpp"
#include "tcs/evaluation.hpp"
#include "tcs/rng.hpp"

namespace tcs {
namespace {

constexpr double kLayerNormEps = 1e-5;
// Below this magnitude a central difference is roundoff, not signal.
constexpr double kGradCheckFloor = 1e-6;
constexpr std::size_t kBlocksPerLayer = 16;
constexpr char kCheckpointMagic[8] = {'T', 'C', 'S', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kCheckpointVersion = 1;

// Offsets of a layer's blocks relative to its first block.
enum LayerBlock : std::size_t {
  kWq, kBq, kWk, kBk, kWv, kBv, kWo, kBo,
  kLn1Gain, kLn1Bias, kW1, kB1, kW2, kB2, kLn2Gain, kLn2Bias,
};

constexpr std::size_t kTokenEmbedding = 0;
constexpr std::size_t kPositionEmbedding = 1;

std::size_t layer_block(std::size_t layer, LayerBlock b) {
  return 2 + layer * kBlocksPerLayer + b;
}

std::size_t output_bias_block(const ModelShape& s) { return 2 + s.layers * kBlocksPerLayer; }

MatrixView view(std::vector<double>& buf, const ParamBlock& b) {
  return MatrixView(buf.data() + b.offset, static_cast<Eigen::Index>(b.rows),
                    static_cast<Eigen::Index>(b.cols));
}

ConstMatrixView view(const std::vector<double>& buf, const ParamBlock& b) {
  return ConstMatrixView(buf.data() + b.offset, static_cast<Eigen::Index>(b.rows),
                         static_cast<Eigen::Index>(b.cols));
}

double gelu(double x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

double gelu_grad(double x) {
  constexpr double c = 0.7978845608028654;
  const double t = std::tanh(c * (x + 0.044715 * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * 0.044715 * x * x);
}

void softmax_rows(RowMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

// Row-wise log-sum-exp.
Eigen::VectorXd log_sum_exp(const RowMatrix& m) {
  Eigen::VectorXd out(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    out(r) = mx + std::log((m.row(r).array() - mx).exp().sum());
  }
  return out;
}

struct LayerNormCache {
  RowMatrix xhat;
  Eigen::VectorXd inv_std;
};

RowMatrix layer_norm(const RowMatrix& x, ConstMatrixView gain, ConstMatrixView bias,
                     LayerNormCache* cache) {
  const Eigen::VectorXd mean = x.rowwise().mean();
  RowMatrix centered = x.colwise() - mean;
  const Eigen::VectorXd var = centered.array().square().rowwise().mean();
  const Eigen::VectorXd inv = (var.array() + kLayerNormEps).rsqrt();
  RowMatrix xhat = centered.array().colwise() * inv.array();
  RowMatrix y = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv;
  }
  return y;
}

RowMatrix layer_norm_backward(const RowMatrix& dy, const LayerNormCache& c, ConstMatrixView gain,
                              MatrixView dgain, MatrixView dbias) {
  dgain.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  const double n = static_cast<double>(dy.cols());
  const RowMatrix dxhat = dy.array().rowwise() * gain.row(0).array();
  const Eigen::VectorXd s1 = dxhat.rowwise().sum();
  const Eigen::VectorXd s2 = (dxhat.array() * c.xhat.array()).rowwise().sum();
  RowMatrix dx = n * dxhat;
  dx.colwise() -= s1;
  dx -= (c.xhat.array().colwise() * s2.array()).matrix();
  dx = dx.array().colwise() * (c.inv_std.array() / n);
  return dx;
}

struct LayerCache {
  RowMatrix input, q, k, v, context, x1, h_pre, h_act;
  std::vector<RowMatrix> attention;  // per head, T x T
  LayerNormCache ln1, ln2;
};

struct ForwardCache {
  std::vector<TokenId> ids;
  std::vector<LayerCache> layers;
  RowMatrix hidden;
};

void check_ids(const ModelShape& shape, std::span<const TokenId> ids) {
  if (ids.empty()) throw Error(ErrorKind::kInvalidArgument, "empty input sequence");
  if (ids.size() > shape.max_len) {
    throw Error(ErrorKind::kInvalidArgument, "sequence longer than the positional table");
  }
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= shape.vocab) {
      throw Error(ErrorKind::kInvalidArgument, "token id " + std::to_string(id) +
                                                   " outside the vocabulary");
    }
  }
}

// Final hidden states (T x D); fills `cache` when given.
RowMatrix encode(const ModelParams& p, std::span<const TokenId> ids, ForwardCache* cache) {
  const ModelShape& s = p.shape();
  check_ids(s, ids);
  const auto T = static_cast<Eigen::Index>(ids.size());
  const auto dh = static_cast<Eigen::Index>(s.dim / s.heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  const auto tok = p.block(kTokenEmbedding);
  const auto pos = p.block(kPositionEmbedding);
  RowMatrix x(T, static_cast<Eigen::Index>(s.dim));
  for (Eigen::Index t = 0; t < T; ++t) x.row(t) = tok.row(ids[t]) + pos.row(t);

  if (cache) {
    cache->ids.assign(ids.begin(), ids.end());
    cache->layers.assign(s.layers, {});
  }
  for (std::size_t l = 0; l < s.layers; ++l) {
    auto B = [&](LayerBlock b) { return p.block(layer_block(l, b)); };
    RowMatrix q = (x * B(kWq)).rowwise() + B(kBq).row(0);
    RowMatrix k = (x * B(kWk)).rowwise() + B(kBk).row(0);
    RowMatrix v = (x * B(kWv)).rowwise() + B(kBv).row(0);
    RowMatrix context(T, static_cast<Eigen::Index>(s.dim));
    std::vector<RowMatrix> attention;
    for (std::size_t h = 0; h < s.heads; ++h) {
      const auto c0 = static_cast<Eigen::Index>(h) * dh;
      RowMatrix a = scale * (q.middleCols(c0, dh) * k.middleCols(c0, dh).transpose());
      softmax_rows(a);
      context.middleCols(c0, dh) = a * v.middleCols(c0, dh);
      if (cache) attention.push_back(std::move(a));
    }
    const RowMatrix attn_out = (context * B(kWo)).rowwise() + B(kBo).row(0);
    LayerCache* lc = cache ? &cache->layers[l] : nullptr;
    RowMatrix x1 = layer_norm(x + attn_out, B(kLn1Gain), B(kLn1Bias), lc ? &lc->ln1 : nullptr);
    RowMatrix h_pre = (x1 * B(kW1)).rowwise() + B(kB1).row(0);
    RowMatrix h_act = h_pre.unaryExpr([](double z) { return gelu(z); });
    const RowMatrix ffn_out = (h_act * B(kW2)).rowwise() + B(kB2).row(0);
    RowMatrix out = layer_norm(x1 + ffn_out, B(kLn2Gain), B(kLn2Bias), lc ? &lc->ln2 : nullptr);
    if (lc) {
      lc->input = std::move(x);
      lc->q = std::move(q);
      lc->k = std::move(k);
      lc->v = std::move(v);
      lc->context = std::move(context);
      lc->attention = std::move(attention);
      lc->x1 = std::move(x1);
      lc->h_pre = std::move(h_pre);
      lc->h_act = std::move(h_act);
    }
    x = std::move(out);
  }
  if (cache) cache->hidden = x;
  return x;
}

// Accumulates d(objective)/d(params) given d(objective)/d(hidden).
void encode_backward(const ModelParams& p, const ForwardCache& cache, RowMatrix dx,
                     std::vector<double>& grad) {
  const ModelShape& s = p.shape();
  const auto& layout = p.layout();
  const auto dh = static_cast<Eigen::Index>(s.dim / s.heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  for (std::size_t li = s.layers; li-- > 0;) {
    const LayerCache& c = cache.layers[li];
    auto B = [&](LayerBlock b) { return p.block(layer_block(li, b)); };
    auto G = [&](LayerBlock b) { return view(grad, layout[layer_block(li, b)]); };

    RowMatrix dr2 = layer_norm_backward(dx, c.ln2, B(kLn2Gain), G(kLn2Gain), G(kLn2Bias));
    // Feed-forward branch.
    G(kB2).row(0) += dr2.colwise().sum();
    G(kW2).noalias() += c.h_act.transpose() * dr2;
    RowMatrix dh_pre = dr2 * B(kW2).transpose();
    dh_pre = dh_pre.array() * c.h_pre.unaryExpr([](double z) { return gelu_grad(z); }).array();
    G(kB1).row(0) += dh_pre.colwise().sum();
    G(kW1).noalias() += c.x1.transpose() * dh_pre;
    RowMatrix dx1 = dr2 + dh_pre * B(kW1).transpose();

    RowMatrix dr1 = layer_norm_backward(dx1, c.ln1, B(kLn1Gain), G(kLn1Gain), G(kLn1Bias));
    // Attention branch.
    G(kBo).row(0) += dr1.colwise().sum();
    G(kWo).noalias() += c.context.transpose() * dr1;
    const RowMatrix dcontext = dr1 * B(kWo).transpose();
    RowMatrix dq(c.q.rows(), c.q.cols()), dk(c.k.rows(), c.k.cols()), dv(c.v.rows(), c.v.cols());
    for (std::size_t h = 0; h < s.heads; ++h) {
      const auto c0 = static_cast<Eigen::Index>(h) * dh;
      const RowMatrix& a = c.attention[h];
      const RowMatrix dctx = dcontext.middleCols(c0, dh);
      const RowMatrix da = dctx * c.v.middleCols(c0, dh).transpose();
      dv.middleCols(c0, dh) = a.transpose() * dctx;
      const Eigen::VectorXd row_dot = (da.array() * a.array()).rowwise().sum();
      RowMatrix ds = a.array() * (da.colwise() - row_dot).array();
      ds *= scale;
      dq.middleCols(c0, dh) = ds * c.k.middleCols(c0, dh);
      dk.middleCols(c0, dh) = ds.transpose() * c.q.middleCols(c0, dh);
    }
    G(kBq).row(0) += dq.colwise().sum();
    G(kBk).row(0) += dk.colwise().sum();
    G(kBv).row(0) += dv.colwise().sum();
    G(kWq).noalias() += c.input.transpose() * dq;
    G(kWk).noalias() += c.input.transpose() * dk;
    G(kWv).noalias() += c.input.transpose() * dv;
    dx = dr1;
    dx.noalias() += dq * B(kWq).transpose();
    dx.noalias() += dk * B(kWk).transpose();
    dx.noalias() += dv * B(kWv).transpose();
  }
  auto dtok = view(grad, layout[kTokenEmbedding]);
  auto dpos = view(grad, layout[kPositionEmbedding]);
  for (Eigen::Index t = 0; t < dx.rows(); ++t) {
    dtok.row(cache.ids[static_cast<std::size_t>(t)]) += dx.row(t);
    dpos.row(t) += dx.row(t);
  }
}

struct SliceResult {
  double weighted_loss = 0.0;
  std::size_t positions = 0;
  double distance_sum = 0.0;
  std::size_t distance_count = 0;
};

// Objective contribution of a slice; gradient scaled by 1 / weight_sum.
SliceResult accumulate(const ModelParams& p, std::span<const TrainingRecord* const> records,
                       const Vocabulary& vocab, bool hard_values, double weight_sum,
                       std::vector<double>* grad) {
  const auto& layout = p.layout();
  const std::size_t bias_block = output_bias_block(p.shape());
  const auto tok = p.block(kTokenEmbedding);
  const auto out_bias = p.block(bias_block);
  SliceResult result;

  for (const TrainingRecord* rec : records) {
    const std::size_t slots = rec->mask_positions.size();
    if (slots == 0) continue;
    ForwardCache cache;
    const RowMatrix hidden = encode(p, rec->input_ids, grad ? &cache : nullptr);
    const auto P = static_cast<Eigen::Index>(slots);
    RowMatrix h_masked(P, hidden.cols());
    RowMatrix targets(P, static_cast<Eigen::Index>(vocab.size()));
    for (std::size_t k = 0; k < slots; ++k) {
      h_masked.row(static_cast<Eigen::Index>(k)) =
          hidden.row(static_cast<Eigen::Index>(rec->mask_positions[k]));
      targets.row(static_cast<Eigen::Index>(k)) = dense_target(*rec, k, vocab, hard_values);
    }
    RowMatrix logits = (h_masked * tok.transpose()).rowwise() + out_bias.row(0);
    const Eigen::VectorXd lse = log_sum_exp(logits);
    for (Eigen::Index k = 0; k < P; ++k) {
      double ce = 0.0;
      for (Eigen::Index j = 0; j < targets.cols(); ++j) {
        if (targets(k, j) > 0.0) ce -= targets(k, j) * (logits(k, j) - lse(k));
      }
      result.weighted_loss += rec->weight * ce;

      const SlotTarget& t = rec->targets[static_cast<std::size_t>(k)];
      if (t.is_soft() && has_rank_distance(rec->dimension)) {
        const TokenId first = vocab.value_id(rec->dimension, 0);
        const auto block = logits.row(k).segment(first, static_cast<Eigen::Index>(t.soft.size()));
        Eigen::Index pred = 0;
        for (Eigen::Index j = 1; j < block.size(); ++j) {
          if (block(j) > block(pred)) pred = j;
        }
        result.distance_sum += rank_distance(static_cast<std::size_t>(pred),
                                             argmax_index(t.soft), rec->dimension);
        ++result.distance_count;
      }
    }
    result.positions += slots;
    if (!grad || weight_sum <= 0.0 || rec->weight == 0.0) continue;

    // d(loss)/d(logits) = w * (softmax - y) / sum(w).
    RowMatrix dlogits = (logits.colwise() - lse).array().exp().matrix() - targets;
    dlogits *= rec->weight / weight_sum;
    view(*grad, layout[bias_block]).row(0) += dlogits.colwise().sum();
    auto dtok = view(*grad, layout[kTokenEmbedding]);
    dtok.noalias() += dlogits.transpose() * h_masked;
    const RowMatrix dh_masked = dlogits * tok;
    RowMatrix dhidden = RowMatrix::Zero(hidden.rows(), hidden.cols());
    for (std::size_t k = 0; k < slots; ++k) {
      dhidden.row(static_cast<Eigen::Index>(rec->mask_positions[k])) +=
          dh_masked.row(static_cast<Eigen::Index>(k));
    }
    encode_backward(p, cache, std::move(dhidden), *grad);
  }
  return result;
}

double batch_weight(std::span<const TrainingRecord* const> records) {
  double total = 0.0;
  for (const auto* r : records) total += r->weight * static_cast<double>(r->mask_positions.size());
  return total;
}

struct StepResult {
  BatchResult batch;
  double distance_sum = 0.0;
  std::size_t distance_count = 0;
};

StepResult run_batch(const ModelParams& p, std::span<const TrainingRecord* const> records,
                     const Vocabulary& vocab, bool hard_values, std::size_t workers,
                     std::vector<double>& grad) {
  grad.assign(p.values().size(), 0.0);
  const double weight_sum = batch_weight(records);
  workers = std::max<std::size_t>(1, std::min(workers, records.size()));
  std::vector<SliceResult> parts(workers);
  if (workers == 1) {
    parts[0] = accumulate(p, records, vocab, hard_values, weight_sum, &grad);
  } else {
    std::vector<std::vector<double>> grads(workers, std::vector<double>(grad.size(), 0.0));
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        const std::size_t begin = records.size() * w / workers;
        const std::size_t end = records.size() * (w + 1) / workers;
        parts[w] = accumulate(p, records.subspan(begin, end - begin), vocab, hard_values,
                              weight_sum, &grads[w]);
      });
    }
    for (auto& th : threads) th.join();
    for (const auto& g : grads) {
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
    }
  }
  StepResult out;
  double weighted = 0.0;
  for (const auto& part : parts) {
    weighted += part.weighted_loss;
    out.batch.positions += part.positions;
    out.distance_sum += part.distance_sum;
    out.distance_count += part.distance_count;
  }
  out.batch.weight_sum = weight_sum;
  out.batch.loss = weight_sum > 0.0 ? weighted / weight_sum : 0.0;

  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      std::string where = "?";
      for (const auto& b : p.layout()) {
        if (i >= b.offset && i < b.offset + b.rows * b.cols) where = b.name;
      }
      throw Error(ErrorKind::kNumeric, "non-finite gradient in " + where + " (loss " +
                                           std::to_string(out.batch.loss) + ")");
    }
  }
  return out;
}

std::vector<const TrainingRecord*> pointers(std::span<const TrainingRecord> batch) {
  std::vector<const TrainingRecord*> out;
  out.reserve(batch.size());
  for (const auto& r : batch) out.push_back(&r);
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw Error(ErrorKind::kSchema, "truncated checkpoint");
  }
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 |
         std::uint32_t{b[3]} << 24;
}

}  // namespace

void ModelShape::validate() const {
  if (vocab == 0 || dim == 0 || layers == 0 || heads == 0 || max_len == 0 || ffn == 0) {
    throw Error(ErrorKind::kConfig, "model sizes must be positive");
  }
  if (dim % heads != 0) throw Error(ErrorKind::kConfig, "model dim must be divisible by heads");
}

std::vector<ParamBlock> parameter_layout(const ModelShape& s) {
  std::vector<ParamBlock> layout;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
    layout.push_back({std::move(name), offset, rows, cols});
    offset += rows * cols;
  };
  add("token_embedding", s.vocab, s.dim);
  add("position_embedding", s.max_len, s.dim);
  for (std::size_t l = 0; l < s.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    add(p + "attn_q_weight", s.dim, s.dim);
    add(p + "attn_q_bias", 1, s.dim);
    add(p + "attn_k_weight", s.dim, s.dim);
    add(p + "attn_k_bias", 1, s.dim);
    add(p + "attn_v_weight", s.dim, s.dim);
    add(p + "attn_v_bias", 1, s.dim);
    add(p + "attn_out_weight", s.dim, s.dim);
    add(p + "attn_out_bias", 1, s.dim);
    add(p + "ln1_gain", 1, s.dim);
    add(p + "ln1_bias", 1, s.dim);
    add(p + "ffn_in_weight", s.dim, s.ffn);
    add(p + "ffn_in_bias", 1, s.ffn);
    add(p + "ffn_out_weight", s.ffn, s.dim);
    add(p + "ffn_out_bias", 1, s.dim);
    add(p + "ln2_gain", 1, s.dim);
    add(p + "ln2_bias", 1, s.dim);
  }
  add("output_bias", 1, s.vocab);
  return layout;
}

ModelParams::ModelParams(const ModelShape& shape)
    : shape_(shape), layout_(parameter_layout(shape)) {
  shape_.validate();
  const auto& last = layout_.back();
  values_.assign(last.offset + last.rows * last.cols, 0.0);
}

ModelParams ModelParams::initialize(const ModelShape& shape, std::uint64_t seed,
                                    double init_std) {
  ModelParams p(shape);
  Rng rng = make_stream(seed, "init");
  for (std::size_t i = 0; i < p.layout_.size(); ++i) {
    const ParamBlock& b = p.layout_[i];
    auto m = p.block(i);
    const bool is_gain = b.name.ends_with("_gain");
    const bool is_bias = b.name.ends_with("_bias");
    if (is_gain) {
      m.setOnes();
    } else if (is_bias) {
      m.setZero();
    } else {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = init_std * standard_normal(rng);
      }
    }
  }
  return p;
}

MatrixView ModelParams::block(std::size_t index) { return view(values_, layout_.at(index)); }

ConstMatrixView ModelParams::block(std::size_t index) const {
  return view(values_, layout_.at(index));
}

std::size_t ModelParams::block_index(const std::string& name) const {
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (layout_[i].name == name) return i;
  }
  throw Error(ErrorKind::kInvalidArgument, "no parameter block named " + name);
}

RowMatrix forward(const ModelParams& params, std::span<const TokenId> ids) {
  const RowMatrix hidden = encode(params, ids, nullptr);
  const auto tok = params.block(kTokenEmbedding);
  const auto bias = params.block(output_bias_block(params.shape()));
  return (hidden * tok.transpose()).rowwise() + bias.row(0);
}

double soft_ce_loss(const RowMatrix& logits, const RowMatrix& targets,
                    std::span<const double> weights) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols() ||
      static_cast<std::size_t>(logits.rows()) != weights.size()) {
    throw Error(ErrorKind::kInvalidArgument, "logits, targets and weights disagree in shape");
  }
  const Eigen::VectorXd lse = log_sum_exp(logits);
  double total = 0.0;
  double weight_sum = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    if (std::abs(targets.row(r).sum() - 1.0) > 1e-6 || targets.row(r).minCoeff() < 0.0) {
      throw Error(ErrorKind::kInvalidArgument, "target row is not a probability vector");
    }
    double ce = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      if (targets(r, j) > 0.0) ce -= targets(r, j) * (logits(r, j) - lse(r));
    }
    total += weights[static_cast<std::size_t>(r)] * ce;
    weight_sum += weights[static_cast<std::size_t>(r)];
  }
  return weight_sum > 0.0 ? total / weight_sum : 0.0;
}

Eigen::VectorXd dense_target(const TrainingRecord& record, std::size_t slot,
                             const Vocabulary& vocab, bool hard_values) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
  const SlotTarget& t = record.targets.at(slot);
  if (!t.is_soft()) {
    y(t.token) = 1.0;
  } else if (hard_values) {
    y(vocab.value_id(record.dimension, argmax_index(t.soft))) = 1.0;
  } else {
    const TokenId first = vocab.value_id(record.dimension, 0);
    for (std::size_t i = 0; i < t.soft.size(); ++i) {
      y(first + static_cast<Eigen::Index>(i)) = t.soft[i];
    }
  }
  return y;
}

BatchResult loss_and_gradient(const ModelParams& params, std::span<const TrainingRecord> batch,
                              const Vocabulary& vocab, std::vector<double>& gradient,
                              bool hard_values) {
  const auto ptrs = pointers(batch);
  return run_batch(params, ptrs, vocab, hard_values, 1, gradient).batch;
}

double batch_loss(const ModelParams& params, std::span<const TrainingRecord> batch,
                  const Vocabulary& vocab, bool hard_values) {
  const auto ptrs = pointers(batch);
  const double weight_sum = batch_weight(ptrs);
  if (weight_sum <= 0.0) return 0.0;
  return accumulate(params, ptrs, vocab, hard_values, weight_sum, nullptr).weighted_loss /
         weight_sum;
}

GradCheckResult check_gradients(const ModelParams& params, std::span<const TrainingRecord> batch,
                                const Vocabulary& vocab, std::size_t coordinates,
                                std::uint64_t seed, double step, bool hard_values) {
  std::vector<double> analytic;
  loss_and_gradient(params, batch, vocab, analytic, hard_values);
  ModelParams probe = params;
  Rng rng = make_stream(seed, "gradcheck");
  GradCheckResult result;
  double total = 0.0;
  for (std::size_t c = 0; c < coordinates; ++c) {
    const std::size_t i = uniform_index(rng, probe.values().size());
    const double saved = probe.values()[i];
    probe.values()[i] = saved + step;
    const double up = batch_loss(probe, batch, vocab, hard_values);
    probe.values()[i] = saved - step;
    const double down = batch_loss(probe, batch, vocab, hard_values);
    probe.values()[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double err = std::abs(analytic[i] - numeric) /
                       std::max({std::abs(analytic[i]), std::abs(numeric), kGradCheckFloor});
    total += err;
    if (err >= result.max_relative_error) {
      result.max_relative_error = err;
      for (const auto& b : probe.layout()) {
        if (i >= b.offset && i < b.offset + b.rows * b.cols) result.worst_block = b.name;
      }
    }
  }
  result.coordinates = coordinates;
  result.mean_relative_error = coordinates ? total / static_cast<double>(coordinates) : 0.0;
  return result;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !(epsilon > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) ||
      !(beta2 >= 0.0 && beta2 < 1.0) || batch_size == 0 || epochs == 0 || workers == 0 ||
      !(init_std > 0.0)) {
    throw Error(ErrorKind::kConfig, "training hyperparameters must be positive (betas in [0, 1))");
  }
}

TrainResult train(const std::vector<TrainingRecord>& dataset, const Vocabulary& vocab,
                  const TrainConfig& config, const std::vector<EvalInstance>& heldout) {
  config.validate();
  if (dataset.empty()) throw Error(ErrorKind::kInvalidArgument, "cannot train on an empty dataset");
  ModelShape shape = config.shape;
  shape.vocab = vocab.size();
  for (const auto& r : dataset) {
    if (r.input_ids.size() > shape.max_len) {
      throw Error(ErrorKind::kInvalidArgument, "record longer than max_len");
    }
  }

  TrainResult result;
  result.params = ModelParams::initialize(shape, config.seed, config.init_std);
  std::vector<double>& theta = result.params.values();
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), grad;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng = make_stream(config.seed, "shuffle", epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    double loss_sum = 0.0, distance_sum = 0.0;
    std::size_t batches = 0, distance_count = 0;
    std::vector<const TrainingRecord*> batch;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(&dataset[order[i]]);
      }
      const StepResult r = run_batch(result.params, batch, vocab, config.hard_values,
                                     config.workers, grad);
      if (!std::isfinite(r.batch.loss) || r.batch.loss > config.divergence_threshold) {
        throw Error(ErrorKind::kNumeric, "training diverged at epoch " + std::to_string(epoch) +
                                             " (batch loss " + std::to_string(r.batch.loss) + ")");
      }
      if (r.batch.positions == 0) continue;
      loss_sum += r.batch.loss;
      ++batches;
      distance_sum += r.distance_sum;
      distance_count += r.distance_count;

      ++step;
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
        theta[i] -= config.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config.epsilon);
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    result.log.push_back({epoch, "train", batches ? loss_sum / static_cast<double>(batches) : nan,
                          distance_count ? distance_sum / static_cast<double>(distance_count) : nan});

    if (!heldout.empty()) {
      double ce_sum = 0.0, dist = 0.0;
      std::size_t scored = 0;
      for (const auto& inst : heldout) {
        const auto probs = predict_value_distribution(result.params, vocab, inst.event_tokens,
                                                      inst.verb_index, inst.dimension);
        const std::size_t gold = label_space(inst.dimension).require_index(inst.gold);
        const auto target = build_soft_target(inst.dimension, gold);
        for (std::size_t i = 0; i < probs.size(); ++i) {
          const double y = config.hard_values ? (i == gold ? 1.0 : 0.0) : target.probs[i];
          if (y > 0.0) ce_sum -= y * std::log(std::max(probs[i], 1e-300));
        }
        if (has_rank_distance(inst.dimension)) {
          dist += rank_distance(argmax_index(probs), gold, inst.dimension);
          ++scored;
        }
      }
      result.log.push_back({epoch, "heldout", ce_sum / static_cast<double>(heldout.size()),
                            scored ? dist / static_cast<double>(scored) : nan});
    }
  }
  return result;
}

void write_loss_log(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,split,loss,mean_distance\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << e.split << ',' << format_number(e.loss) << ','
        << format_number(e.mean_distance) << '\n';
  }
}

std::vector<double> predict_value_distribution(const ModelParams& params,
                                               const Vocabulary& vocab,
                                               const std::vector<std::string>& event_tokens,
                                               std::size_t verb_index, Dimension dimension) {
  if (params.shape().vocab != vocab.size()) {
    throw Error(ErrorKind::kInvalidArgument, "model and vocabulary sizes differ");
  }
  const Sequence seq =
      build_query_sequence(event_tokens, verb_index, dimension, vocab, params.shape().max_len);
  const RowMatrix hidden = encode(params, seq.ids, nullptr);
  const auto tok = params.block(kTokenEmbedding);
  const auto bias = params.block(output_bias_block(params.shape()));
  const std::size_t n = label_space(dimension).size();
  const TokenId first = vocab.value_id(dimension, 0);
  Eigen::VectorXd logits(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = first + static_cast<Eigen::Index>(i);
    logits(static_cast<Eigen::Index>(i)) =
        hidden.row(static_cast<Eigen::Index>(seq.val_pos)).dot(tok.row(id)) + bias(0, id);
  }
  const double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp();
  e /= e.sum();
  return {e.data(), e.data() + e.size()};
}

void save_checkpoint(std::ostream& out, const ModelParams& params) {
  const ModelShape& s = params.shape();
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  for (std::size_t v : {s.vocab, s.dim, s.layers, s.heads, s.max_len, s.ffn}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  for (double x : params.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  if (!out) throw Error(ErrorKind::kIo, "failed writing checkpoint");
}

ModelParams load_checkpoint(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error(ErrorKind::kSchema, "not a checkpoint file");
  }
  if (get_u32(in) != kCheckpointVersion) {
    throw Error(ErrorKind::kSchema, "unsupported checkpoint version");
  }
  ModelShape s;
  s.vocab = get_u32(in);
  s.dim = get_u32(in);
  s.layers = get_u32(in);
  s.heads = get_u32(in);
  s.max_len = get_u32(in);
  s.ffn = get_u32(in);
  s.validate();
  ModelParams p(s);
  for (double& x : p.values()) x = static_cast<double>(std::bit_cast<float>(get_u32(in)));
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorKind::kSchema, "trailing bytes after checkpoint");
  }
  return p;
}

}  // namespace tcs
