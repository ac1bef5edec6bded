#pragma once

// Generate-then-verify loop for collecting score-consistent descriptions.
//
// For each image a prompt is built from its score, the dataset statistics and
// a three-level template set. A generator turns the prompt into a
// description; a discriminator rates how well the description agrees with the
// score. Rounds repeat until the rating reaches the threshold or the round
// budget runs out. Every round is kept on the record.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace levelscore::pipeline {

inline constexpr int kRecordSchemaVersion = 1;
inline constexpr std::string_view kRecordHeader =
    "# levelscore sample-records schema_version=1";

struct DatasetStats {
  double mean = 0.0;
  double median = 0.0;
  double variance = 0.0;  // population variance
  std::size_t count = 0;

  bool operator==(const DatasetStats&) const = default;
};

/// Population mean and variance; median averages the middle pair for even
/// counts. Throws kEmptyInput on an empty list, kInvalidArgument on
/// non-finite scores.
DatasetStats compute_stats(std::vector<double> scores);

struct TemplateSet {
  std::string perception;
  std::string cognition;
  std::string emotion;
  std::string version;

  /// Throws kConfig when a level or the version is empty.
  void validate() const;
  /// Parses {"version", "perception", "cognition", "emotion"}.
  static TemplateSet from_json(std::string_view text);

  bool operator==(const TemplateSet&) const = default;
};

struct RecordInputs {
  std::string image_id;  // opaque handle, never dereferenced
  double score = 0.0;
  DatasetStats stats;
  TemplateSet templates;
};

/// Canonical JSON payload: keys sorted, no whitespace. Holds the score, its
/// z-score against the stats (0 when the variance is 0), the stats and the
/// three template levels in perception, cognition, emotion order.
std::string build_prompt(const RecordInputs& inputs);

/// Thrown by clients for transport-level failures (timeouts, refused
/// connections). Retried by the orchestrator; anything else propagates.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  /// `round` is 0-based so regenerations can differ.
  virtual std::string generate(const std::string& image_id, const std::string& prompt,
                               std::size_t round) = 0;
};

class DiscriminatorClient {
 public:
  virtual ~DiscriminatorClient() = default;
  /// Alignment between the description and the score, in [0, 1].
  virtual double align(double score, const DatasetStats& stats,
                       const std::string& description) = 0;
};

struct PipelineConfig {
  double threshold = 0.8;
  std::size_t max_rounds = 5;
  std::size_t retry_budget = 2;  // extra attempts per client call
  double score_max = 5.0;

  void validate() const;
};

enum class RecordStatus { kAccepted, kFailed, kClientError };

std::string_view to_string(RecordStatus status) noexcept;
RecordStatus parse_record_status(std::string_view text);

struct Round {
  std::size_t index = 0;  // 1-based
  std::string description;
  double alignment = 0.0;
  bool accepted = false;
  std::size_t attempts = 0;  // client calls made, including retries

  bool operator==(const Round&) const = default;
};

struct SampleRecord {
  std::string image_id;
  double score = 0.0;
  DatasetStats stats;
  std::string template_version;
  std::vector<Round> rounds;
  RecordStatus status = RecordStatus::kFailed;
  std::string error;  // client error message, empty otherwise

  bool operator==(const SampleRecord&) const = default;
};

/// Runs generator then discriminator until a round scores >= threshold or
/// max_rounds rounds are spent. Transport errors are retried up to
/// retry_budget extra times per call; exhausting them ends the record with
/// kClientError. Out-of-range alignments are client errors too.
SampleRecord generate_with_verification(const RecordInputs& inputs, GeneratorClient& generator,
                                        DiscriminatorClient& discriminator,
                                        const PipelineConfig& config);

struct PipelineSummary {
  std::size_t total = 0;
  std::size_t accepted = 0;
  std::size_t failed = 0;
  std::size_t client_error = 0;
  std::size_t rounds = 0;
};

PipelineSummary summarize(const std::vector<SampleRecord>& records);

/// One JSON object, no trailing newline.
std::string record_to_json(const SampleRecord& record);
SampleRecord record_from_json(std::string_view line);

struct ExportResult {
  std::size_t written = 0;
  std::size_t skipped = 0;
};

/// JSONL with a leading header comment line. Writes to a temporary file and
/// renames it into place; on failure throws kIo stating how many records made
/// it out.
ExportResult export_dataset(const std::vector<SampleRecord>& records,
                            const std::filesystem::path& path, bool accepted_only);

/// Skips blank lines and lines starting with '#'.
std::vector<SampleRecord> import_dataset(const std::filesystem::path& path);

}  // namespace levelscore::pipeline
