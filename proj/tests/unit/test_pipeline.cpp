#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "levelscore/datagen_pipeline.hpp"
#include "levelscore/error.hpp"
#include "levelscore/mock_clients.hpp"
#include "support.hpp"

using namespace levelscore;
using namespace levelscore::pipeline;
using levelscore::testing::fixture;
using levelscore::testing::slurp;
using levelscore::testing::TempDir;

namespace {

TemplateSet templates() { return TemplateSet::from_json(slurp(fixture("templates.json"))); }

RecordInputs inputs(const std::string& id, double score) {
  return {id, score, compute_stats({1.5, 2.25, 3.0, 4.0, 4.75}), templates()};
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST(ComputeStats, Examples) {
  const DatasetStats s = compute_stats({1, 2, 3, 4, 5});
  EXPECT_EQ(s.mean, 3.0);
  EXPECT_EQ(s.median, 3.0);
  EXPECT_EQ(s.variance, 2.0);
  EXPECT_EQ(s.count, 5u);
  const DatasetStats c = compute_stats({2.5, 2.5, 2.5});
  EXPECT_EQ(c.mean, 2.5);
  EXPECT_EQ(c.median, 2.5);
  EXPECT_EQ(c.variance, 0.0);
  EXPECT_EQ(compute_stats({1, 2}).median, 1.5);
  EXPECT_THROW(compute_stats({}), Error);
  EXPECT_THROW(compute_stats({1.0, NAN}), Error);
}

TEST(TemplateSet, ParsesAndValidates) {
  EXPECT_EQ(templates().version, "golden-1");
  EXPECT_THROW(TemplateSet::from_json(R"({"version":"v","perception":"a","cognition":"b"})"),
               Error);
  EXPECT_THROW(TemplateSet::from_json(R"({"version":"v","perception":"","cognition":"b",
                                          "emotion":"c"})"),
               Error);
  EXPECT_THROW(TemplateSet::from_json("not json"), Error);
}

TEST(BuildPrompt, ZScoreField) {
  const DatasetStats s = compute_stats({1, 2, 3, 4, 5});
  const auto z_of = [&](double score) {
    return nlohmann::json::parse(build_prompt({"x", score, s, templates()}))["z_score"]
        .get<double>();
  };
  EXPECT_EQ(z_of(3.0), 0.0);
  EXPECT_NEAR(z_of(3.0 + std::sqrt(2.0)), 1.0, 1e-15);
  const DatasetStats flat = compute_stats({2, 2});
  EXPECT_EQ(nlohmann::json::parse(build_prompt({"x", 4.0, flat, templates()}))["z_score"], 0.0);
}

TEST(BuildPrompt, MatchesGoldenBytes) {
  EXPECT_EQ(build_prompt(inputs("img-042", 3.9)), slurp(fixture("prompt_golden.json")));
}

TEST(GenerateWithVerification, ScriptedSchedules) {
  MockGenerator gen(1);
  PipelineConfig cfg;

  ScriptedDiscriminator first({0.9});
  SampleRecord r = generate_with_verification(inputs("a", 3.0), gen, first, cfg);
  EXPECT_EQ(r.status, RecordStatus::kAccepted);
  EXPECT_EQ(r.rounds.size(), 1u);

  ScriptedDiscriminator third({0.5, 0.7, 0.85});
  r = generate_with_verification(inputs("a", 3.0), gen, third, cfg);
  EXPECT_EQ(r.status, RecordStatus::kAccepted);
  ASSERT_EQ(r.rounds.size(), 3u);
  EXPECT_EQ(r.rounds[2].index, 3u);
  EXPECT_FALSE(r.rounds[1].accepted);
  EXPECT_TRUE(r.rounds[2].accepted);

  ScriptedDiscriminator never({0.5});
  r = generate_with_verification(inputs("a", 3.0), gen, never, cfg);
  EXPECT_EQ(r.status, RecordStatus::kFailed);
  EXPECT_EQ(r.rounds.size(), 5u);
}

TEST(GenerateWithVerification, RoundInvariantsOnRandomSchedules) {
  MockGenerator gen(2);
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> rounds(1, 8), len(1, 10);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> schedule(len(rng));
    for (double& v : schedule) v = u(rng);
    PipelineConfig cfg;
    cfg.max_rounds = rounds(rng);
    cfg.threshold = 0.05 + 0.95 * u(rng);
    ScriptedDiscriminator dis(schedule);
    const SampleRecord r = generate_with_verification(inputs("r", 2.0), gen, dis, cfg);
    ASSERT_GE(r.rounds.size(), 1u);
    EXPECT_LE(r.rounds.size(), cfg.max_rounds);
    for (std::size_t i = 0; i + 1 < r.rounds.size(); ++i) {
      EXPECT_LT(r.rounds[i].alignment, cfg.threshold);
    }
    if (r.status == RecordStatus::kAccepted) {
      EXPECT_GE(r.rounds.back().alignment, cfg.threshold);
    } else {
      EXPECT_EQ(r.status, RecordStatus::kFailed);
      EXPECT_EQ(r.rounds.size(), cfg.max_rounds);
    }
  }
}

TEST(GenerateWithVerification, RetriesTransportErrors) {
  MockGenerator inner(3);
  ScriptedDiscriminator dis({0.95});
  PipelineConfig cfg;
  cfg.retry_budget = 2;

  FlakyGenerator recovers(inner, 2);
  const SampleRecord ok = generate_with_verification(inputs("f", 3.0), recovers, dis, cfg);
  EXPECT_EQ(ok.status, RecordStatus::kAccepted);
  EXPECT_EQ(ok.rounds[0].attempts, 4u);  // three generator calls plus one discriminator call

  FlakyGenerator broken(inner, 3);
  const SampleRecord bad = generate_with_verification(inputs("f", 3.0), broken, dis, cfg);
  EXPECT_EQ(bad.status, RecordStatus::kClientError);
  EXPECT_TRUE(bad.rounds.empty());
  EXPECT_NE(bad.error.find("simulated transport failure"), std::string::npos);
}

TEST(GenerateWithVerification, RejectsBadInputsAndAlignments) {
  MockGenerator gen(4);
  ScriptedDiscriminator dis({1.5});
  PipelineConfig cfg;
  const SampleRecord r = generate_with_verification(inputs("b", 3.0), gen, dis, cfg);
  EXPECT_EQ(r.status, RecordStatus::kClientError);
  try {
    generate_with_verification(inputs("b", 5.5), gen, dis, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
  }
  cfg.threshold = 0.0;
  EXPECT_THROW(generate_with_verification(inputs("b", 3.0), gen, dis, cfg), Error);
  cfg.threshold = 0.8;
  cfg.max_rounds = 0;
  EXPECT_THROW(generate_with_verification(inputs("b", 3.0), gen, dis, cfg), Error);
}

TEST(MockClients, DeterministicAndSeedSensitive) {
  const std::string prompt = build_prompt(inputs("m", 4.2));
  MockGenerator a(5), b(5), c(6);
  bool differs = false;
  for (std::size_t round = 0; round < 20; ++round) {
    EXPECT_EQ(a.generate("m", prompt, round), b.generate("m", prompt, round));
    differs |= a.generate("m", prompt, round) != c.generate("m", prompt, round);
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(a.generate("m", prompt, 0).rfind("draft 1.", 0), 0u);
}

TEST(MockClients, HashDiscriminatorReadsLastToneWord) {
  HashDiscriminator dis;
  const DatasetStats s = compute_stats({1, 2, 3, 4, 5});
  EXPECT_EQ(dis.align(3.0, s, "no tone here"), 0.0);
  EXPECT_EQ(dis.align(3.0, s, "weak at first, overall ordinary"), 1.0);
  EXPECT_NEAR(dis.align(3.0, s, "strong"), std::exp(-0.5), 1e-15);
}

TEST(Export, EmptyFileHasHeaderOnly) {
  TempDir dir("export");
  const ExportResult r = export_dataset({}, dir / "out.jsonl", false);
  EXPECT_EQ(r.written, 0u);
  EXPECT_EQ(slurp(dir / "out.jsonl"), std::string(kRecordHeader) + "\n");
}

TEST(Export, AcceptedOnlyFilterAndRoundTrip) {
  MockGenerator gen(7);
  ScriptedDiscriminator yes({0.9}), no({0.1});
  PipelineConfig cfg;
  std::vector<SampleRecord> records{
      generate_with_verification(inputs("a", 1.5), gen, yes, cfg),
      generate_with_verification(inputs("b", 2.5), gen, no, cfg),
      generate_with_verification(inputs("c", 4.75), gen, yes, cfg)};

  TempDir dir("export");
  const ExportResult filtered = export_dataset(records, dir / "acc.jsonl", true);
  EXPECT_EQ(filtered.written, 2u);
  EXPECT_EQ(filtered.skipped, 1u);
  EXPECT_EQ(count_lines(slurp(dir / "acc.jsonl")), 3u);  // header plus two records

  export_dataset(records, dir / "all.jsonl", false);
  EXPECT_EQ(import_dataset(dir / "all.jsonl"), records);
  EXPECT_FALSE(std::filesystem::exists(dir / "all.jsonl.tmp"));
  for (const SampleRecord& r : records) EXPECT_EQ(record_from_json(record_to_json(r)), r);
}

TEST(Export, ClientErrorsRoundTripWithMessage) {
  MockGenerator inner(8);
  FlakyGenerator broken(inner, 10);
  ScriptedDiscriminator dis({0.9});
  const SampleRecord r = generate_with_verification(inputs("e", 3.0), broken, dis, {});
  const nlohmann::json j = nlohmann::json::parse(record_to_json(r));
  EXPECT_EQ(j["final_status"], "client_error");
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(record_from_json(record_to_json(r)), r);
}

TEST(Export, RejectsUnknownSchema) {
  EXPECT_THROW(record_from_json(R"({"schema_version":2})"), Error);
  EXPECT_THROW(record_from_json("{"), Error);
}

TEST(Summarize, NoRecordLoss) {
  MockGenerator gen(9);
  HashDiscriminator dis;
  std::vector<SampleRecord> records;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 50; ++i) {
    records.push_back(
        generate_with_verification(inputs("s" + std::to_string(i), u(rng)), gen, dis, {}));
  }
  const PipelineSummary s = summarize(records);
  EXPECT_EQ(s.total, 50u);
  EXPECT_EQ(s.accepted + s.failed + s.client_error, s.total);
}
