#include "levelscore/datagen_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "levelscore/error.hpp"

namespace levelscore::pipeline {
namespace {

using nlohmann::json;

json stats_json(const DatasetStats& s) {
  return json{{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"variance", s.variance}};
}

DatasetStats stats_from(const json& j) {
  DatasetStats s;
  s.count = j.at("count").get<std::size_t>();
  s.mean = j.at("mean").get<double>();
  s.median = j.at("median").get<double>();
  s.variance = j.at("variance").get<double>();
  return s;
}

std::string require_text(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorCode::kConfig, std::string("template set is missing '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

template <typename Call>
auto with_retries(Call&& call, std::size_t budget, std::size_t& attempts, std::string& failure)
    -> std::optional<decltype(call())> {
  for (std::size_t i = 0; i <= budget; ++i) {
    ++attempts;
    try {
      return call();
    } catch (const TransportError& e) {
      failure = e.what();
    }
  }
  return std::nullopt;
}

}  // namespace

DatasetStats compute_stats(std::vector<double> scores) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyInput, "no scores to summarize");
  if (!std::all_of(scores.begin(), scores.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::kInvalidArgument, "scores must be finite");
  }
  DatasetStats s;
  s.count = scores.size();
  const double n = static_cast<double>(scores.size());
  s.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : scores) ss += (v - s.mean) * (v - s.mean);
  s.variance = ss / n;
  std::sort(scores.begin(), scores.end());
  const std::size_t mid = scores.size() / 2;
  s.median = scores.size() % 2 ? scores[mid] : 0.5 * (scores[mid - 1] + scores[mid]);
  return s;
}

void TemplateSet::validate() const {
  if (perception.empty()) throw Error(ErrorCode::kConfig, "template level 'perception' is empty");
  if (cognition.empty()) throw Error(ErrorCode::kConfig, "template level 'cognition' is empty");
  if (emotion.empty()) throw Error(ErrorCode::kConfig, "template level 'emotion' is empty");
  if (version.empty()) throw Error(ErrorCode::kConfig, "template set has no version");
}

TemplateSet TemplateSet::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("template file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "template file must hold a JSON object");
  TemplateSet t{require_text(j, "perception"), require_text(j, "cognition"),
                require_text(j, "emotion"), require_text(j, "version")};
  t.validate();
  return t;
}

std::string build_prompt(const RecordInputs& inputs) {
  inputs.templates.validate();
  if (!std::isfinite(inputs.score)) {
    throw Error(ErrorCode::kInvalidArgument, "score must be finite");
  }
  const DatasetStats& s = inputs.stats;
  const double z = s.variance > 0.0 ? (inputs.score - s.mean) / std::sqrt(s.variance) : 0.0;
  json payload = {
      {"score", inputs.score},
      {"z_score", z},
      {"stats", stats_json(s)},
      {"template_version", inputs.templates.version},
      {"templates",
       json::array({json{{"level", "perception"}, {"text", inputs.templates.perception}},
                    json{{"level", "cognition"}, {"text", inputs.templates.cognition}},
                    json{{"level", "emotion"}, {"text", inputs.templates.emotion}}})},
  };
  return payload.dump();
}

void PipelineConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kParameter, "threshold must lie in (0, 1]");
  }
  if (max_rounds < 1) throw Error(ErrorCode::kParameter, "max_rounds must be at least 1");
  if (!(score_max > 0.0) || !std::isfinite(score_max)) {
    throw Error(ErrorCode::kParameter, "score_max must be positive");
  }
}

std::string_view to_string(RecordStatus status) noexcept {
  switch (status) {
    case RecordStatus::kAccepted: return "accepted";
    case RecordStatus::kFailed: return "failed";
    case RecordStatus::kClientError: return "client_error";
  }
  return "failed";
}

RecordStatus parse_record_status(std::string_view text) {
  if (text == "accepted") return RecordStatus::kAccepted;
  if (text == "failed") return RecordStatus::kFailed;
  if (text == "client_error") return RecordStatus::kClientError;
  throw Error(ErrorCode::kInvalidArgument, "unknown record status '" + std::string(text) + "'");
}

SampleRecord generate_with_verification(const RecordInputs& inputs, GeneratorClient& generator,
                                        DiscriminatorClient& discriminator,
                                        const PipelineConfig& config) {
  config.validate();
  if (!(inputs.score >= 0.0 && inputs.score <= config.score_max)) {
    throw Error(ErrorCode::kOutOfRange, "score " + std::to_string(inputs.score) +
                                            " outside [0, " + std::to_string(config.score_max) +
                                            "]");
  }
  const std::string prompt = build_prompt(inputs);

  SampleRecord rec;
  rec.image_id = inputs.image_id;
  rec.score = inputs.score;
  rec.stats = inputs.stats;
  rec.template_version = inputs.templates.version;
  rec.status = RecordStatus::kFailed;

  for (std::size_t r = 0; r < config.max_rounds; ++r) {
    Round round;
    round.index = r + 1;
    std::string failure;
    auto description = with_retries(
        [&] { return generator.generate(inputs.image_id, prompt, r); }, config.retry_budget,
        round.attempts, failure);
    if (!description) {
      rec.status = RecordStatus::kClientError;
      rec.error = "generator: " + failure;
      return rec;
    }
    round.description = std::move(*description);
    auto alignment = with_retries(
        [&] { return discriminator.align(inputs.score, inputs.stats, round.description); },
        config.retry_budget, round.attempts, failure);
    if (!alignment) {
      rec.status = RecordStatus::kClientError;
      rec.error = "discriminator: " + failure;
      return rec;
    }
    if (!(*alignment >= 0.0 && *alignment <= 1.0)) {
      rec.status = RecordStatus::kClientError;
      rec.error = "discriminator returned alignment outside [0, 1]";
      return rec;
    }
    round.alignment = *alignment;
    round.accepted = round.alignment >= config.threshold;
    rec.rounds.push_back(std::move(round));
    if (rec.rounds.back().accepted) {
      rec.status = RecordStatus::kAccepted;
      return rec;
    }
  }
  return rec;
}

PipelineSummary summarize(const std::vector<SampleRecord>& records) {
  PipelineSummary s;
  s.total = records.size();
  for (const SampleRecord& r : records) {
    s.rounds += r.rounds.size();
    switch (r.status) {
      case RecordStatus::kAccepted: ++s.accepted; break;
      case RecordStatus::kFailed: ++s.failed; break;
      case RecordStatus::kClientError: ++s.client_error; break;
    }
  }
  return s;
}

std::string record_to_json(const SampleRecord& record) {
  json rounds = json::array();
  for (const Round& r : record.rounds) {
    rounds.push_back({{"round", r.index},
                      {"description", r.description},
                      {"alignment", r.alignment},
                      {"verdict", r.accepted ? "accepted" : "rejected"},
                      {"attempts", r.attempts}});
  }
  json j = {{"schema_version", kRecordSchemaVersion},
            {"image_id", record.image_id},
            {"score", record.score},
            {"stats", stats_json(record.stats)},
            {"template_version", record.template_version},
            {"rounds", std::move(rounds)},
            {"final_status", to_string(record.status)}};
  if (!record.error.empty()) j["error"] = record.error;
  return j.dump();
}

SampleRecord record_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    const int version = j.at("schema_version").get<int>();
    if (version != kRecordSchemaVersion) {
      throw Error(ErrorCode::kConfig, "unsupported record schema_version " + std::to_string(version));
    }
    SampleRecord rec;
    rec.image_id = j.at("image_id").get<std::string>();
    rec.score = j.at("score").get<double>();
    rec.stats = stats_from(j.at("stats"));
    rec.template_version = j.at("template_version").get<std::string>();
    for (const json& r : j.at("rounds")) {
      Round round;
      round.index = r.at("round").get<std::size_t>();
      round.description = r.at("description").get<std::string>();
      round.alignment = r.at("alignment").get<double>();
      round.accepted = r.at("verdict").get<std::string>() == "accepted";
      round.attempts = r.at("attempts").get<std::size_t>();
      rec.rounds.push_back(std::move(round));
    }
    rec.status = parse_record_status(j.at("final_status").get<std::string>());
    rec.error = j.value("error", std::string());
    return rec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed record: ") + e.what());
  }
}

ExportResult export_dataset(const std::vector<SampleRecord>& records,
                            const std::filesystem::path& path, bool accepted_only) {
  ExportResult result;
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << kRecordHeader << '\n';
    for (const SampleRecord& r : records) {
      if (accepted_only && r.status != RecordStatus::kAccepted) {
        ++result.skipped;
        continue;
      }
      // One write per record so a failure never leaves half a line counted.
      const std::string line = record_to_json(r) + '\n';
      out.write(line.data(), static_cast<std::streamsize>(line.size()));
      if (!out.flush()) {
        throw Error(ErrorCode::kIo, "write failed for " + tmp.string() + " after " +
                                        std::to_string(result.written) + " records");
      }
      ++result.written;
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot move " + tmp.string() + " into place; " +
                                    std::to_string(result.written) + " records written");
  }
  return result;
}

std::vector<SampleRecord> import_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<SampleRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    out.push_back(record_from_json(line));
  }
  return out;
}

}  // namespace levelscore::pipeline
