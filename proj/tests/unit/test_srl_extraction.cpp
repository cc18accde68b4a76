#include <doctest.h>

#include <fstream>
#include <sstream>

#include "tcs/error.hpp"
#include "tcs/extraction.hpp"
#include "tcs/srl.hpp"
#include "tcs/tuple_io.hpp"

using namespace tcs;

namespace {

std::vector<std::string> words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string join(const std::vector<std::string>& ws) {
  std::string out;
  for (const auto& w : ws) out += (out.empty() ? "" : " ") + w;
  return out;
}

SrlSentence one_frame(const std::string& text, std::size_t verb,
                      std::vector<SrlArgument> args) {
  SrlSentence s;
  s.doc_id = "t";
  s.tokens = words(text);
  s.frames.push_back({verb, std::move(args)});
  return s;
}

std::vector<SrlSentence> corpus_from(const std::string& text, IngestStats* stats) {
  std::istringstream in(text);
  return read_corpus(in, stats);
}

}  // namespace

TEST_CASE("corpus reader") {
  IngestStats stats;
  CHECK(corpus_from("", &stats).empty());
  CHECK(stats.skipped == 0);
  CHECK(stats.records == 0);

  const std::string ok =
      R"({"doc_id":"d","sent_index":0,"tokens":["I","ran","today"],)"
      R"("frames":[{"verb_index":1,"args":[{"role":"ARG-TMP","span":[2,3]}]}]})";
  auto one = corpus_from(ok + "\n", &stats);
  REQUIRE(one.size() == 1);
  CHECK(one[0].tokens == std::vector<std::string>{"I", "ran", "today"});
  CHECK(stats.skipped == 0);

  const std::string bad =
      R"({"doc_id":"d","sent_index":1,"tokens":["I","ran"],)"
      R"("frames":[{"verb_index":1,"args":[{"role":"ARG-TMP","span":[1,4]}]}]})";
  auto mixed = corpus_from("# comment\n" + ok + "\n\n" + bad + "\nnot json\n" + ok + "\n", &stats);
  CHECK(mixed.size() == 2);
  CHECK(stats.records == 4);
  CHECK(stats.skipped == 2);
  REQUIRE(stats.issues.size() == 2);
  CHECK(stats.issues[0].line == 4);

  auto span_only = corpus_from(bad + "\n", &stats);
  CHECK(span_only.empty());
  CHECK(stats.skipped == 1);
}

TEST_CASE("round trip through json keeps the sentence") {
  SrlSentence s = one_frame("We met on Monday", 1, {{"ARG0", 0, 1}, {"ARGM-TMP", 2, 4}});
  s.left_context = words("It rained");
  const SrlSentence back = sentence_from_json(nlohmann::json::parse(sentence_to_json(s).dump()));
  CHECK(back.tokens == s.tokens);
  CHECK(back.left_context == s.left_context);
  CHECK_FALSE(back.right_context.has_value());
  CHECK(back.frames.size() == 1);
  CHECK(is_temporal_role("argm-tmp"));
  CHECK(is_temporal_role("ARG-TMP"));
  CHECK_FALSE(is_temporal_role("ARG1"));
}

TEST_CASE("has_temporal_argument") {
  CHECK(has_temporal_argument(one_frame("I ran today", 1, {{"ARG-TMP", 2, 3}})));
  CHECK_FALSE(has_temporal_argument(one_frame("I ate cake", 1, {{"ARG0", 0, 1}, {"ARG1", 2, 3}})));
  SrlSentence two = one_frame("I said he left yesterday", 1, {{"ARG0", 0, 1}});
  two.frames.push_back({3, {{"ARG0", 2, 3}, {"ARG-TMP", 4, 5}}});
  CHECK(has_temporal_argument(two));
}

TEST_CASE("numeric parsing") {
  auto val = [](const std::string& t) {
    const auto ws = words(t);
    const auto m = parse_numeric(ws, 0);
    return m ? m->value : -1.0;
  };
  CHECK(val("2") == 2.0);
  CHECK(val("a") == 1.0);
  CHECK(val("four") == 4.0);
  CHECK(val("1.5") == 1.5);
  CHECK(val("2,000") == 2000.0);
  CHECK(val("chance") == -1.0);
}

TEST_CASE("rule examples") {
  auto dur = [](const std::string& t) { return extract_duration(words(t)); };
  CHECK(dur("for 2 hours") == DurationUnit::kHour);
  CHECK_FALSE(dur("for a second chance").has_value());
  CHECK(dur("for 36 hours") == DurationUnit::kDay);

  auto freq = [](const std::string& t) { return extract_frequency(words(t)); };
  CHECK(freq("four times per week") == DurationUnit::kDay);
  CHECK(freq("every day") == DurationUnit::kDay);
  CHECK_FALSE(freq("when everyday life changed").has_value());

  auto typ = [](const std::string& t) { return extract_typical_time(words(t)); };
  CHECK(typ("on Monday") == TypicalTimeMatch{Dimension::kTypicalWeek, "monday"});
  CHECK_FALSE(typ("until Monday").has_value());
  CHECK(typ("in the winter") == TypicalTimeMatch{Dimension::kTypicalSeason, "winter"});

  auto ub = [](const std::string& t) { return extract_upper_bound(words(t)); };
  CHECK(ub("yesterday") == DurationUnit::kDay);
  CHECK(ub("in 3 days") == DurationUnit::kWeek);
  CHECK(ub("last week") == DurationUnit::kWeek);

  auto hier = [](const std::string& t) { return extract_hierarchy(words(t)); };
  auto before = hier("before the speech");
  REQUIRE(before.has_value());
  CHECK(before->label == "before");
  CHECK(before->embedded_event == words("the speech"));
  auto during = hier("while driving home");
  REQUIRE(during.has_value());
  CHECK(during->label == "during");
  CHECK(during->embedded_event == words("driving home"));
  CHECK_FALSE(hier("before").has_value());
}

TEST_CASE("sentence-level extraction") {
  SrlSentence jack = one_frame("Jack rested for 2 hours before the speech", 1,
                               {{"ARG0", 0, 1}, {"ARG-TMP", 2, 5}, {"ARG-TMP", 5, 8}});
  const auto tuples = extract_sentence(jack);
  REQUIRE(tuples.size() == 2);
  CHECK(tuples[0].event_tokens == words("Jack rested before the speech"));
  CHECK(tuples[0].verb_index == 1);
  CHECK(tuples[0].dimension == Dimension::kDuration);
  CHECK(tuples[0].value == "hour");
  CHECK(tuples[1].dimension == Dimension::kHierarchy);
  CHECK(tuples[1].arg_tmp_event_tokens == words("the speech"));

  const auto morning =
      extract_sentence(one_frame("She exercises every morning", 1, {{"ARG-TMP", 2, 4}}));
  REQUIRE(morning.size() == 1);
  CHECK(morning[0].dimension == Dimension::kFrequency);
  CHECK(morning[0].value == "day");

  CHECK(extract_sentence(one_frame("We wait until Monday", 1, {{"ARG-TMP", 2, 4}})).empty());
}

TEST_CASE("fixture corpus matches the hand-derived table") {
  std::ifstream in(std::string(TCS_TEST_DATA_DIR) + "/fixture_corpus.jsonl");
  REQUIRE(in.good());
  IngestStats stats;
  const auto sentences = read_corpus(in, &stats);
  CHECK(stats.skipped == 1);
  const auto tuples = extract_corpus(sentences);
  CHECK(extract_corpus(sentences, 3) == tuples);

  std::ifstream tsv(std::string(TCS_TEST_DATA_DIR) + "/fixture_expected.tsv");
  REQUIRE(tsv.good());
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(tsv, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      cols.push_back(line.substr(start, tab - start));
    }
    cols.push_back(line.substr(start));
    rows.push_back(cols);
  }
  REQUIRE(rows.size() == tuples.size());
  std::size_t matched = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto& t = tuples[i];
    CAPTURE(i);
    const bool same = std::to_string(t.provenance.sent_index) == r[0] &&
                      std::to_string(t.provenance.frame) == r[1] &&
                      dimension_name(t.dimension) == r[2] && t.value == r[3] &&
                      std::to_string(t.verb_index) == r[4] && join(t.event_tokens) == r[5] &&
                      join(t.arg_tmp_event_tokens) == (r.size() > 6 ? r[6] : "");
    CHECK(same);
    matched += same;
  }
  // Precision and recall against the hand table.
  CHECK(matched == rows.size());
}

TEST_CASE("tuple json round trip") {
  std::ifstream in(std::string(TCS_TEST_DATA_DIR) + "/fixture_corpus.jsonl");
  const auto tuples = extract_corpus(read_corpus(in));
  std::stringstream buf;
  write_tuples(buf, tuples);
  CHECK(read_tuples(buf) == tuples);

  std::istringstream bad(R"({"event_tokens":["x"],"verb_index":0,"dimension":"duration","value":"fortnight"})");
  CHECK_THROWS_AS(read_tuples(bad), Error);
}
