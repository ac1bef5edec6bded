#pragma once

// Desk-scale stand-in for a two-objective assessor. A sample carries a short
// categorical attribute sequence (the "description"), a feature vector that
// noisily embeds those attributes, and a score that is a fixed function of
// the attributes. The model is a linear encoder with two softmax heads: one
// over the K score levels, one per attribute position.
//
// Training runs in two stages. The multi-task stage minimizes description CE
// plus k_asl times the score loss; the score-only stage minimizes the score
// loss alone. Both use plain gradient descent with a fixed step.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levelscore/error.hpp"
#include "levelscore/label_builders.hpp"
#include "levelscore/losses.hpp"
#include "levelscore/score_lattice.hpp"

namespace levelscore::toy {

struct DatasetConfig {
  std::uint64_t seed = 0;
  std::size_t samples = 2000;
  std::size_t attributes = 10;   // L, description length
  std::size_t vocabulary = 2;    // V, values per attribute
  std::size_t features = 128;    // F
  double feature_noise = 0.0;    // std of Gaussian noise added before scaling
  double label_noise = 0.0;      // std of Gaussian noise on the score
  double weight_decay = 1.0;     // attribute j weights scale by decay^j
  double train_fraction = 0.8;

  void validate() const;
};

struct SyntheticSample {
  std::vector<std::size_t> attributes;  // L tokens in [0, V)
  std::vector<double> features;         // F values
  double clean_score = 0.0;             // noise-free score
  double score = 0.0;                   // clean_score + label noise, clamped to [l_1, l_K]
};

struct SyntheticDataset {
  DatasetConfig config;
  std::vector<SyntheticSample> samples;
  std::size_t train_count = 0;
  /// Per-attribute value weights, row-major L x V.
  std::vector<double> value_weights;

  std::span<const SyntheticSample> train() const noexcept {
    return std::span(samples).first(train_count);
  }
  std::span<const SyntheticSample> test() const noexcept {
    return std::span(samples).subspan(train_count);
  }
  /// The noise-free scoring function applied to an attribute sequence.
  double score_of(std::span<const std::size_t> attributes, const LevelGrid& grid) const;
};

/// Deterministic under config.seed. The first train_fraction of samples form
/// the training split.
SyntheticDataset make_dataset(const DatasetConfig& config, const LevelGrid& grid);

/// max(score) - min(score) as a fraction of l_K - l_1.
double score_coverage(std::span<const SyntheticSample> samples, const LevelGrid& grid);

struct ModelShape {
  std::size_t features = 128;
  std::size_t hidden = 10;
  std::size_t levels = 5;
  std::size_t attributes = 10;
  std::size_t vocabulary = 2;
};

/// All parameters live in one flat vector:
///   encoder W (H x F), encoder bias (H), score head (K x H), score bias (K),
///   description head (L*V x H), description bias (L*V).
/// The encoder starts at N(0, 1/F) * init_scale; everything else at zero.
class ToyModel {
 public:
  ToyModel(const ModelShape& shape, std::uint64_t seed, double init_scale = 1.0);

  const ModelShape& shape() const noexcept { return shape_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  std::span<const double> encoder() const noexcept { return block(0, enc_size()); }
  std::span<const double> encoder_bias() const noexcept { return block(enc_size(), shape_.hidden); }
  std::span<const double> score_head() const noexcept { return block(score_offset(), score_size()); }
  std::span<const double> score_bias() const noexcept {
    return block(score_offset() + score_size(), shape_.levels);
  }
  std::span<const double> description_head() const noexcept {
    return block(desc_offset(), desc_size());
  }
  std::span<const double> description_bias() const noexcept {
    return block(desc_offset() + desc_size(), desc_rows());
  }

  /// Hidden activation, score logits and description logits for one input.
  void forward(std::span<const double> features, std::span<double> hidden,
               std::span<double> score_logits, std::span<double> description_logits) const;

  ScoreDistribution predict_distribution(std::span<const double> features) const;

  /// FNV-1a over the raw parameter bytes.
  std::uint64_t parameter_hash() const noexcept;

  // Offsets into parameters().
  std::size_t enc_size() const noexcept { return shape_.hidden * shape_.features; }
  std::size_t score_offset() const noexcept { return enc_size() + shape_.hidden; }
  std::size_t score_size() const noexcept { return shape_.levels * shape_.hidden; }
  std::size_t desc_offset() const noexcept { return score_offset() + score_size() + shape_.levels; }
  std::size_t desc_rows() const noexcept { return shape_.attributes * shape_.vocabulary; }
  std::size_t desc_size() const noexcept { return desc_rows() * shape_.hidden; }

 private:
  std::span<const double> block(std::size_t offset, std::size_t n) const noexcept {
    return std::span<const double>(params_).subspan(offset, n);
  }

  ModelShape shape_;
  std::vector<double> params_;
};

/// Which terms an objective includes.
struct Objective {
  bool description = true;
  bool score = true;
  /// Description positions supervised (the first n); capped at L.
  std::size_t supervised_positions = 0;
  LossWeights weights;
};

/// Batch-mean loss terms. description_ce sums over supervised positions.
struct LossTerms {
  double description_ce = 0.0;
  double score_ce = 0.0;
  double kl = 0.0;
  double asl = 0.0;
  double total = 0.0;
};

/// Evaluates the objective on a batch and, when `gradient` is non-null,
/// overwrites it with d(total)/d(parameters). labels[i] is the target score
/// distribution for batch[i].
LossTerms loss_and_gradient(const ToyModel& model, std::span<const SyntheticSample> batch,
                            std::span<const ScoreDistribution> labels, const LevelGrid& grid,
                            const Objective& objective, std::vector<double>* gradient);

/// Fixed-sigma SBDE label for every sample score.
std::vector<ScoreDistribution> build_labels(std::span<const SyntheticSample> samples,
                                            const LevelGrid& grid,
                                            const SolverConfig& solver = {});

struct TrainConfig {
  std::uint64_t seed = 0;
  double learning_rate = 0.05;
  std::size_t mat_steps = 500;
  std::size_t sot_steps = 500;
  std::size_t batch_size = 0;  // 0 = full batch
  LossWeights weights;
  double sufficiency = 1.0;    // fraction of description positions supervised
  bool mat_enabled = true;
  bool score_in_mat = true;    // false: the first stage trains descriptions only
  std::size_t hidden = 10;
  double init_scale = 1.0;

  void validate() const;
  std::size_t supervised_positions(std::size_t attributes) const;
};

enum class Stage { kMat, kSot };

struct TrainLogEntry {
  std::size_t step = 0;  // global, 0-based
  Stage stage = Stage::kMat;
  std::optional<double> description_ce;
  std::optional<double> asl;
  double total = 0.0;
};

struct TrainResult {
  ToyModel model;
  std::vector<TrainLogEntry> log;
};

/// Raised when a loss or parameter becomes non-finite.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t step, const std::string& what)
      : Error(ErrorCode::kTrainingDiverged,
              what + " at step " + std::to_string(step)),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

ModelShape shape_for(const SyntheticDataset& data, const LevelGrid& grid, std::size_t hidden);

/// Runs the first stage for mat_steps (skipped when mat_enabled is false) then
/// the score-only stage for sot_steps, starting from `model`. Deterministic.
TrainResult train(ToyModel model, std::span<const SyntheticSample> data,
                  std::span<const ScoreDistribution> labels, const LevelGrid& grid,
                  const TrainConfig& config);

/// Convenience: fresh model seeded from config.seed, trained on the train split.
TrainResult train(const SyntheticDataset& data, const LevelGrid& grid, const TrainConfig& config);

struct EvalResult {
  std::size_t count = 0;
  std::optional<double> srocc;  // absent when degenerate
  std::optional<double> plcc;
  bool degenerate = false;
  double description_ce = 0.0;  // mean per position over all L positions

  /// Mean of SROCC and PLCC; nullopt when degenerate.
  std::optional<double> mean_correlation() const;
};

EvalResult evaluate(const ToyModel& model, std::span<const SyntheticSample> data,
                    const LevelGrid& grid);

/// Mean per-position description CE over all L positions.
double description_ce(const ToyModel& model, std::span<const SyntheticSample> data);

// Sweeps.

struct SweepSettings {
  DatasetConfig data;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t threads = 0;  // 0 = hardware concurrency
};

/// Defaults for the sweeps: small noisy datasets where descriptions carry
/// information the features alone resolve poorly.
SweepSettings sufficiency_defaults();
SweepSettings generation_defaults();

struct SufficiencyCell {
  double rho = 0.0;
  std::uint64_t seed = 0;
  std::optional<EvalResult> eval;  // absent when training failed
  std::string error;
};

struct SufficiencyRow {
  double rho = 0.0;
  std::size_t supervised_positions = 0;
  std::size_t seeds_ok = 0;
  std::optional<double> mean_srocc;
  std::optional<double> mean_plcc;
  std::optional<double> mean_correlation;
};

struct SufficiencyResult {
  std::vector<SufficiencyRow> rows;
  std::vector<SufficiencyCell> cells;
  /// SROCC between rho and mean correlation over rows with data.
  std::optional<double> rank_correlation;
};

/// rho in {0.1, ..., 1.0}; one full two-stage run per (rho, seed). Each seed
/// fixes both the dataset and the model init, so columns differ only in rho.
SufficiencyResult sufficiency_sweep(const SweepSettings& settings, const LevelGrid& grid);

struct GenerationCell {
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::size_t mat_steps = 0;
  double description_ce = 0.0;  // training split, at the checkpoint
  std::optional<EvalResult> eval;
  std::string error;
};

struct GenerationRow {
  double fraction = 0.0;
  std::size_t mat_steps = 0;
  std::size_t seeds_ok = 0;
  double description_ce = 0.0;
  std::optional<double> mean_correlation;
};

struct GenerationResult {
  std::vector<GenerationRow> rows;
  std::vector<GenerationCell> cells;
  /// Pearson correlation between checkpoint CE and mean correlation.
  std::optional<double> ce_performance_correlation;
  /// Checkpoint pairs (per seed) where training-split CE went up.
  std::size_t ce_increase_violations = 0;
};

/// Checkpoints at 0, 10, ..., 100 % of train.mat_steps. The first stage trains
/// descriptions only; each checkpoint then gets train.sot_steps score-only
/// steps and is evaluated on the test split.
GenerationResult generation_capability_sweep(const SweepSettings& settings,
                                             const LevelGrid& grid);

}  // namespace levelscore::toy
