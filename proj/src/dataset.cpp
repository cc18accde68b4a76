#include "tcs/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tcs/error.hpp"

namespace tcs {
namespace {

constexpr char kBinaryMagic[8] = {'T', 'C', 'S', 'D', 'A', 'T', 'A', '1'};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const std::string& s) { bytes_ += s; }

  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    const char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(p[i])} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const char* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(p[i])} << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) { return std::string(take(n), n); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const char* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw Error(ErrorKind::kSchema, "truncated binary record");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::string bytes_;
  std::size_t pos_ = 0;
};

void check_record(const TrainingRecord& r) {
  const auto fail = [](const std::string& m) { throw Error(ErrorKind::kSchema, m); };
  if (r.input_ids.empty()) fail("record has no input ids");
  if (r.val_pos >= r.input_ids.size()) fail("val_pos out of range");
  if (r.mask_positions.size() != r.targets.size()) fail("mask positions and targets differ in size");
  if (!(r.weight >= 0.0) || !std::isfinite(r.weight)) fail("weight must be finite and non-negative");
  for (std::size_t k = 0; k < r.mask_positions.size(); ++k) {
    if (r.mask_positions[k] >= r.input_ids.size()) fail("mask position out of range");
    const auto& t = r.targets[k];
    if (t.is_soft()) {
      if (t.soft.size() != label_space(r.dimension).size()) fail("soft target has wrong length");
      double sum = 0.0;
      for (double p : t.soft) sum += p;
      if (std::abs(sum - 1.0) > 1e-6) fail("soft target does not sum to 1");
    }
  }
}

std::string encode_binary(const TrainingRecord& r) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(r.dimension));
  w.f64(r.weight);
  w.u32(static_cast<std::uint32_t>(r.val_pos));
  w.u32(static_cast<std::uint32_t>(r.input_ids.size()));
  for (TokenId id : r.input_ids) w.i32(id);
  w.u32(static_cast<std::uint32_t>(r.mask_positions.size()));
  for (std::size_t k = 0; k < r.mask_positions.size(); ++k) {
    w.u32(static_cast<std::uint32_t>(r.mask_positions[k]));
    w.i32(r.targets[k].token);
    w.u32(static_cast<std::uint32_t>(r.targets[k].soft.size()));
    for (double p : r.targets[k].soft) w.f64(p);
  }
  return w.bytes();
}

TrainingRecord decode_binary(std::string payload) {
  ByteReader in(std::move(payload));
  TrainingRecord r;
  const auto dim = in.u8();
  if (dim >= kNumDimensions) throw Error(ErrorKind::kSchema, "bad dimension tag");
  r.dimension = kAllDimensions[dim];
  r.weight = in.f64();
  r.val_pos = in.u32();
  r.input_ids.resize(in.u32());
  for (TokenId& id : r.input_ids) id = in.i32();
  const auto masks = in.u32();
  for (std::uint32_t k = 0; k < masks; ++k) {
    r.mask_positions.push_back(in.u32());
    SlotTarget t;
    t.token = in.i32();
    t.soft.resize(in.u32());
    for (double& p : t.soft) p = in.f64();
    r.targets.push_back(std::move(t));
  }
  if (!in.done()) throw Error(ErrorKind::kSchema, "trailing bytes in binary record");
  return r;
}

nlohmann::ordered_json record_to_json(const TrainingRecord& r) {
  nlohmann::ordered_json j;
  j["dimension"] = std::string(dimension_name(r.dimension));
  j["weight"] = r.weight;
  j["val_pos"] = r.val_pos;
  j["input_ids"] = r.input_ids;
  j["mask_positions"] = r.mask_positions;
  auto targets = nlohmann::ordered_json::array();
  for (const auto& t : r.targets) {
    nlohmann::ordered_json tj;
    tj["id"] = t.token;
    if (t.is_soft()) tj["soft"] = t.soft;
    targets.push_back(std::move(tj));
  }
  j["targets"] = std::move(targets);
  return j;
}

TrainingRecord record_from_json(const nlohmann::json& j) {
  TrainingRecord r;
  auto dim = parse_dimension(j.at("dimension").get<std::string>());
  if (!dim) throw Error(ErrorKind::kSchema, "unknown dimension in record");
  r.dimension = *dim;
  r.weight = j.at("weight").get<double>();
  r.val_pos = j.at("val_pos").get<std::size_t>();
  r.input_ids = j.at("input_ids").get<std::vector<TokenId>>();
  r.mask_positions = j.at("mask_positions").get<std::vector<std::size_t>>();
  for (const auto& tj : j.at("targets")) {
    SlotTarget t;
    t.token = tj.at("id").get<TokenId>();
    if (tj.contains("soft")) t.soft = tj.at("soft").get<std::vector<double>>();
    r.targets.push_back(std::move(t));
  }
  return r;
}

}  // namespace

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "jsonl") return DatasetFormat::kJsonl;
  if (name == "binary") return DatasetFormat::kBinary;
  throw Error(ErrorKind::kInvalidArgument, "format must be jsonl or binary, got " + std::string(name));
}

std::vector<TrainingRecord> build_dataset(const std::vector<TemporalTuple>& tuples,
                                          const Vocabulary& vocab, const DatasetOptions& options,
                                          DatasetSummary* summary) {
  options.masking.validate();
  std::vector<std::size_t> kept;
  if (options.balance) {
    std::vector<Dimension> dims;
    dims.reserve(tuples.size());
    for (const auto& t : tuples) dims.push_back(t.dimension);
    kept = balanced_indices(dims, options.masking.seed);
  } else {
    kept.resize(tuples.size());
    for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i;
  }

  WeightTable weights;
  for (std::size_t i : kept) weights.add(tuples[i].dimension, tuples[i].value);

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, kept.size()));
  std::vector<TrainingRecord> records(kept.size());
  std::vector<MaskingTally> tallies(workers);
  auto run = [&](std::size_t w) {
    const std::size_t begin = kept.size() * w / workers;
    const std::size_t end = kept.size() * (w + 1) / workers;
    for (std::size_t ordinal = begin; ordinal < end; ++ordinal) {
      const TemporalTuple& t = tuples[kept[ordinal]];
      const double weight = options.weight_adjust ? weights.weight(t.dimension, t.value) : 1.0;
      Sequence seq = build_sequence(t, vocab, options.masking.multi_sentence, options.max_length);
      Rng rng = masking_stream(options.masking.seed, ordinal);
      records[ordinal] =
          apply_masking(seq, weight, options.masking, options.norm_mode, vocab, rng, &tallies[w]);
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (auto& th : threads) th.join();
  }

  if (summary) {
    summary->input_tuples = tuples.size();
    summary->retained_tuples = kept.size();
    summary->tally = {};
    for (const auto& t : tallies) summary->tally.merge(t);
  }
  return records;
}

void write_dataset(std::ostream& out, const std::vector<TrainingRecord>& records,
                   DatasetFormat format, const std::vector<std::string>& header) {
  if (format == DatasetFormat::kJsonl) {
    for (const auto& line : header) out << "# " << line << '\n';
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
    return;
  }
  std::string header_text;
  for (const auto& line : header) header_text += line + '\n';
  ByteWriter w;
  w.raw(std::string(kBinaryMagic, sizeof(kBinaryMagic)));
  w.u32(static_cast<std::uint32_t>(header_text.size()));
  w.raw(header_text);
  w.u64(records.size());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  for (const auto& r : records) {
    ByteWriter rw;
    const std::string payload = encode_binary(r);
    rw.u32(static_cast<std::uint32_t>(payload.size()));
    rw.raw(payload);
    out.write(rw.bytes().data(), static_cast<std::streamsize>(rw.bytes().size()));
  }
}

std::vector<TrainingRecord> read_dataset(std::istream& in) {
  if (!in) throw Error(ErrorKind::kIo, "dataset stream is not readable");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string bytes = buffer.str();
  std::vector<TrainingRecord> records;

  if (bytes.size() >= sizeof(kBinaryMagic) &&
      std::memcmp(bytes.data(), kBinaryMagic, sizeof(kBinaryMagic)) == 0) {
    ByteReader reader(bytes.substr(sizeof(kBinaryMagic)));
    const auto header_len = reader.u32();
    reader.str(header_len);
    const auto count = reader.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto len = reader.u32();
      records.push_back(decode_binary(reader.str(len)));
      check_record(records.back());
    }
    if (!reader.done()) throw Error(ErrorKind::kSchema, "trailing bytes after last record");
    return records;
  }

  std::istringstream lines(bytes);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    try {
      records.push_back(record_from_json(nlohmann::json::parse(line)));
      check_record(records.back());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kSchema, "dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::kSchema, "dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace tcs
