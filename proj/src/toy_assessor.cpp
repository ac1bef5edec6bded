#include "levelscore/toy_assessor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "levelscore/kernels.hpp"
#include "levelscore/metrics.hpp"
#include "levelscore/parallel.hpp"
#include "levelscore/rng.hpp"

namespace levelscore::toy {
namespace {

constexpr std::uint64_t kModelStream = 1;
constexpr std::uint64_t kBatchStream = 2;

// In-place log-softmax; returns nothing, writes out[i] = x[i] - logsumexp(x).
void log_softmax_into(const double* x, std::size_t n, double* out) {
  const double m = *std::max_element(x, x + n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  const double lse = m + std::log(s);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - lse;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double raw_range_low(const std::vector<double>& w, std::size_t L, std::size_t V) {
  double s = 0.0;
  for (std::size_t j = 0; j < L; ++j) s += *std::min_element(w.begin() + j * V, w.begin() + (j + 1) * V);
  return s;
}

double raw_range_high(const std::vector<double>& w, std::size_t L, std::size_t V) {
  double s = 0.0;
  for (std::size_t j = 0; j < L; ++j) s += *std::max_element(w.begin() + j * V, w.begin() + (j + 1) * V);
  return s;
}

}  // namespace

void DatasetConfig::validate() const {
  if (samples < 1) throw Error(ErrorCode::kParameter, "dataset needs at least one sample");
  if (attributes < 1) throw Error(ErrorCode::kParameter, "attribute count must be positive");
  if (vocabulary < 2) throw Error(ErrorCode::kParameter, "vocabulary must have at least two values");
  if (features < 1) throw Error(ErrorCode::kParameter, "feature dimension must be positive");
  if (!(feature_noise >= 0.0) || !std::isfinite(feature_noise) || !(label_noise >= 0.0) ||
      !std::isfinite(label_noise)) {
    throw Error(ErrorCode::kParameter, "noise levels must be finite and non-negative");
  }
  if (!(weight_decay > 0.0) || !std::isfinite(weight_decay)) {
    throw Error(ErrorCode::kParameter, "weight decay must be positive");
  }
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw Error(ErrorCode::kParameter, "train fraction must lie in (0, 1]");
  }
}

double SyntheticDataset::score_of(std::span<const std::size_t> attrs, const LevelGrid& grid) const {
  const std::size_t L = config.attributes, V = config.vocabulary;
  if (attrs.size() != L) throw Error(ErrorCode::kDimensionMismatch, "attribute sequence length");
  double raw = 0.0;
  for (std::size_t j = 0; j < L; ++j) {
    if (attrs[j] >= V) throw Error(ErrorCode::kOutOfRange, "attribute value outside vocabulary");
    raw += value_weights[j * V + attrs[j]];
  }
  const double lo = raw_range_low(value_weights, L, V);
  const double hi = raw_range_high(value_weights, L, V);
  return grid.front() + (grid.back() - grid.front()) * (raw - lo) / (hi - lo);
}

SyntheticDataset make_dataset(const DatasetConfig& config, const LevelGrid& grid) {
  config.validate();
  const std::size_t L = config.attributes, V = config.vocabulary, F = config.features;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, V - 1);

  SyntheticDataset out;
  out.config = config;
  out.value_weights.resize(L * V);
  double scale = 1.0;
  for (std::size_t j = 0; j < L; ++j, scale *= config.weight_decay) {
    for (std::size_t v = 0; v < V; ++v) out.value_weights[j * V + v] = normal(rng) * scale;
  }
  // F x (L*V) embedding of the attribute one-hots.
  std::vector<double> embed(F * L * V);
  const double inv_sqrt_l = 1.0 / std::sqrt(static_cast<double>(L));
  for (double& e : embed) e = normal(rng) * inv_sqrt_l;

  const double inv_sqrt_f = 1.0 / std::sqrt(static_cast<double>(F));
  out.samples.resize(config.samples);
  for (SyntheticSample& s : out.samples) {
    s.attributes.resize(L);
    for (std::size_t j = 0; j < L; ++j) s.attributes[j] = pick(rng);
    s.clean_score = out.score_of(s.attributes, grid);
    // Noise is always drawn so attributes do not depend on the noise levels.
    const double label_eps = normal(rng);
    s.score = std::clamp(s.clean_score + config.label_noise * label_eps, grid.front(), grid.back());
    s.features.assign(F, 0.0);
    for (std::size_t f = 0; f < F; ++f) {
      double acc = 0.0;
      for (std::size_t j = 0; j < L; ++j) acc += embed[f * L * V + j * V + s.attributes[j]];
      s.features[f] = (acc + config.feature_noise * normal(rng)) * inv_sqrt_f;
    }
  }
  out.train_count = static_cast<std::size_t>(
      std::floor(config.train_fraction * static_cast<double>(config.samples)));
  out.train_count = std::clamp<std::size_t>(out.train_count, 1, config.samples);
  return out;
}

double score_coverage(std::span<const SyntheticSample> samples, const LevelGrid& grid) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "no samples");
  const auto [lo, hi] = std::minmax_element(
      samples.begin(), samples.end(),
      [](const SyntheticSample& a, const SyntheticSample& b) { return a.score < b.score; });
  return (hi->score - lo->score) / (grid.back() - grid.front());
}

ToyModel::ToyModel(const ModelShape& shape, std::uint64_t seed, double init_scale) : shape_(shape) {
  if (shape.features == 0 || shape.hidden == 0 || shape.levels < 2 || shape.attributes == 0 ||
      shape.vocabulary < 2) {
    throw Error(ErrorCode::kParameter, "invalid model shape");
  }
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
    throw Error(ErrorCode::kParameter, "init scale must be finite and non-negative");
  }
  params_.assign(desc_offset() + desc_size() + desc_rows(), 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = init_scale / std::sqrt(static_cast<double>(shape.features));
  for (std::size_t i = 0; i < enc_size(); ++i) params_[i] = normal(rng) * scale;
}

void ToyModel::forward(std::span<const double> features, std::span<double> hidden,
                       std::span<double> score_logits, std::span<double> description_logits) const {
  const auto& k = kernels::active();
  const ModelShape& s = shape_;
  if (features.size() != s.features || hidden.size() != s.hidden ||
      score_logits.size() != s.levels || description_logits.size() != desc_rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "forward buffer sizes do not match the model");
  }
  const double* p = params_.data();
  std::copy_n(p + enc_size(), s.hidden, hidden.data());
  k.gemv(p, s.hidden, s.features, features.data(), hidden.data());
  std::copy_n(p + score_offset() + score_size(), s.levels, score_logits.data());
  k.gemv(p + score_offset(), s.levels, s.hidden, hidden.data(), score_logits.data());
  std::copy_n(p + desc_offset() + desc_size(), desc_rows(), description_logits.data());
  k.gemv(p + desc_offset(), desc_rows(), s.hidden, hidden.data(), description_logits.data());
}

ScoreDistribution ToyModel::predict_distribution(std::span<const double> features) const {
  std::vector<double> h(shape_.hidden), sl(shape_.levels), dl(desc_rows());
  forward(features, h, sl, dl);
  return ScoreDistribution(softmax(sl));
}

std::uint64_t ToyModel::parameter_hash() const noexcept {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(params_.data());
  for (std::size_t i = 0; i < params_.size() * sizeof(double); ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ull;
  }
  return hash;
}

LossTerms loss_and_gradient(const ToyModel& model, std::span<const SyntheticSample> batch,
                            std::span<const ScoreDistribution> labels, const LevelGrid& grid,
                            const Objective& objective, std::vector<double>* gradient) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyInput, "empty batch");
  if (!objective.description && !objective.score) {
    throw Error(ErrorCode::kInvalidArgument, "objective has no terms");
  }
  const ModelShape& s = model.shape();
  if (objective.score && labels.size() != batch.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one label per sample required");
  }
  if (grid.size() != s.levels) {
    throw Error(ErrorCode::kDimensionMismatch, "grid size differs from the score head");
  }
  objective.weights.validate();
  const auto& k = kernels::active();
  const std::size_t H = s.hidden, K = s.levels, V = s.vocabulary;
  const std::size_t supervised = std::min(objective.supervised_positions, s.attributes);
  // The score term carries k_asl only when it shares the objective with descriptions.
  const double score_weight = objective.description ? objective.weights.k_asl : 1.0;
  const double k_kl = objective.weights.k;

  const double* p = model.parameters().data();
  const double* U = p + model.score_offset();
  const double* D = p + model.desc_offset();
  double* g = nullptr;
  if (gradient) {
    gradient->assign(model.parameters().size(), 0.0);
    g = gradient->data();
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  std::vector<double> h(H), sl(K), dl(model.desc_rows()), logp(K), gs(K), gd(V), gh(H);
  LossTerms t;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const SyntheticSample& x = batch[n];
    model.forward(x.features, h, sl, dl);
    std::fill(gh.begin(), gh.end(), 0.0);

    if (objective.score) {
      log_softmax_into(sl.data(), K, logp.data());
      const std::size_t idx = nearest_level(x.score, grid);
      const std::span<const double> target = labels[n].probs();
      const double ce = -logp[idx];
      double kl = 0.0;
      for (std::size_t i = 0; i < K; ++i) {
        if (target[i] > 0.0) kl += target[i] * (std::log(target[i]) - logp[i]);
      }
      kl = std::max(kl, 0.0);
      t.score_ce += ce;
      t.kl += kl;
      if (g) {
        for (std::size_t i = 0; i < K; ++i) {
          const double q = std::exp(logp[i]);
          gs[i] = score_weight * ((q - (i == idx ? 1.0 : 0.0)) + k_kl * (q - target[i]));
        }
        k.ger(inv_n, gs.data(), K, h.data(), H, g + model.score_offset());
        k.axpy(inv_n, gs.data(), g + model.score_offset() + model.score_size(), K);
        k.gemv_t(U, K, H, gs.data(), gh.data());
      }
    }

    if (objective.description) {
      for (std::size_t j = 0; j < supervised; ++j) {
        double* logits = dl.data() + j * V;
        log_softmax_into(logits, V, logits);
        const std::size_t tok = x.attributes[j];
        t.description_ce -= logits[tok];
        if (g) {
          for (std::size_t v = 0; v < V; ++v) gd[v] = std::exp(logits[v]) - (v == tok ? 1.0 : 0.0);
          k.ger(inv_n, gd.data(), V, h.data(), H, g + model.desc_offset() + j * V * H);
          k.axpy(inv_n, gd.data(), g + model.desc_offset() + model.desc_size() + j * V, V);
          k.gemv_t(D + j * V * H, V, H, gd.data(), gh.data());
        }
      }
    }

    if (g) {
      k.ger(inv_n, gh.data(), H, x.features.data(), s.features, g);
      k.axpy(inv_n, gh.data(), g + model.enc_size(), H);
    }
  }
  t.description_ce *= inv_n;
  t.score_ce *= inv_n;
  t.kl *= inv_n;
  t.asl = t.score_ce + k_kl * t.kl;
  if (objective.description && objective.score) {
    t.total = mat_loss(t.description_ce, t.asl, objective.weights);
  } else if (objective.score) {
    t.total = t.asl;
  } else {
    t.total = t.description_ce;
  }
  return t;
}

std::vector<ScoreDistribution> build_labels(std::span<const SyntheticSample> samples,
                                            const LevelGrid& grid, const SolverConfig& solver) {
  std::vector<ScoreDistribution> labels;
  labels.reserve(samples.size());
  for (const SyntheticSample& s : samples) {
    SbdeResult r = sbde_estimate(s.score, grid, solver);
    if (!r.converged) {
      throw Error(ErrorCode::kNumeric, "label solver did not converge for score " +
                                           std::to_string(s.score));
    }
    labels.push_back(std::move(r.dist));
  }
  return labels;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kParameter, "learning rate must be positive and finite");
  }
  if (!(sufficiency > 0.0 && sufficiency <= 1.0)) {
    throw Error(ErrorCode::kParameter, "sufficiency fraction must lie in (0, 1]");
  }
  if (hidden == 0) throw Error(ErrorCode::kParameter, "hidden width must be positive");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
    throw Error(ErrorCode::kParameter, "init scale must be finite and non-negative");
  }
  weights.validate();
}

std::size_t TrainConfig::supervised_positions(std::size_t attributes) const {
  // The epsilon keeps 0.3 * 10 from rounding up to 4.
  const double n = std::ceil(sufficiency * static_cast<double>(attributes) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(n), 1, attributes);
}

ModelShape shape_for(const SyntheticDataset& data, const LevelGrid& grid, std::size_t hidden) {
  return ModelShape{data.config.features, hidden, grid.size(), data.config.attributes,
                    data.config.vocabulary};
}

TrainResult train(ToyModel model, std::span<const SyntheticSample> data,
                  std::span<const ScoreDistribution> labels, const LevelGrid& grid,
                  const TrainConfig& config) {
  config.validate();
  if (data.empty()) throw Error(ErrorCode::kEmptyInput, "no training samples");
  if (labels.size() != data.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one label per training sample required");
  }
  const std::size_t stage1 = config.mat_enabled ? config.mat_steps : 0;
  const std::size_t total_steps = stage1 + config.sot_steps;
  const bool full_batch = config.batch_size == 0 || config.batch_size >= data.size();

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, kBatchStream));
  std::size_t cursor = data.size();
  std::vector<SyntheticSample> batch_samples;
  std::vector<ScoreDistribution> batch_labels;

  Objective mat{true, config.score_in_mat, config.supervised_positions(model.shape().attributes),
                config.weights};
  Objective sot{false, true, 0, config.weights};

  TrainResult out{std::move(model), {}};
  out.log.reserve(total_steps);
  std::vector<double> grad;
  for (std::size_t step = 0; step < total_steps; ++step) {
    const bool in_mat = step < stage1;
    const Objective& obj = in_mat ? mat : sot;

    std::span<const SyntheticSample> xs = data;
    std::span<const ScoreDistribution> ys = labels;
    if (!full_batch) {
      batch_samples.clear();
      batch_labels.clear();
      for (std::size_t b = 0; b < config.batch_size; ++b) {
        if (cursor == order.size()) {
          std::shuffle(order.begin(), order.end(), shuffle_rng);
          cursor = 0;
        }
        batch_samples.push_back(data[order[cursor]]);
        batch_labels.push_back(labels[order[cursor]]);
        ++cursor;
      }
      xs = batch_samples;
      ys = batch_labels;
    }

    const LossTerms terms = loss_and_gradient(out.model, xs, ys, grid, obj, &grad);
    if (!std::isfinite(terms.total)) throw TrainingDiverged(step, "loss is not finite");

    TrainLogEntry entry;
    entry.step = step;
    entry.stage = in_mat ? Stage::kMat : Stage::kSot;
    if (obj.description) entry.description_ce = terms.description_ce;
    if (obj.score) entry.asl = terms.asl;
    entry.total = terms.total;
    out.log.push_back(entry);

    std::span<double> params = out.model.parameters();
    kernels::axpy(-config.learning_rate, grad, params);
    if (!all_finite(params)) throw TrainingDiverged(step, "parameters became non-finite");
  }
  return out;
}

TrainResult train(const SyntheticDataset& data, const LevelGrid& grid, const TrainConfig& config) {
  config.validate();
  ToyModel model(shape_for(data, grid, config.hidden), derive_seed(config.seed, kModelStream),
                 config.init_scale);
  const std::vector<ScoreDistribution> labels = build_labels(data.train(), grid);
  return train(std::move(model), data.train(), labels, grid, config);
}

std::optional<double> EvalResult::mean_correlation() const {
  if (!srocc || !plcc) return std::nullopt;
  return 0.5 * (*srocc + *plcc);
}

double description_ce(const ToyModel& model, std::span<const SyntheticSample> data) {
  if (data.empty()) throw Error(ErrorCode::kEmptyInput, "no samples");
  const ModelShape& s = model.shape();
  std::vector<double> h(s.hidden), sl(s.levels), dl(model.desc_rows());
  double ce = 0.0;
  for (const SyntheticSample& x : data) {
    model.forward(x.features, h, sl, dl);
    for (std::size_t j = 0; j < s.attributes; ++j) {
      double* logits = dl.data() + j * s.vocabulary;
      log_softmax_into(logits, s.vocabulary, logits);
      ce -= logits[x.attributes[j]];
    }
  }
  return ce / static_cast<double>(data.size() * s.attributes);
}

EvalResult evaluate(const ToyModel& model, std::span<const SyntheticSample> data,
                    const LevelGrid& grid) {
  if (data.size() < 2) throw Error(ErrorCode::kEmptyInput, "evaluation needs at least two samples");
  EvalResult r;
  r.count = data.size();
  std::vector<double> predicted, truth;
  predicted.reserve(data.size());
  truth.reserve(data.size());
  for (const SyntheticSample& x : data) {
    predicted.push_back(decode_score(model.predict_distribution(x.features), grid));
    truth.push_back(x.score);
  }
  r.description_ce = description_ce(model, data);
  try {
    const PairedScores pairs(predicted, truth);
    r.srocc = srocc(pairs);
    r.plcc = plcc(pairs);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateInput) throw;
    r.degenerate = true;
    r.srocc.reset();
    r.plcc.reset();
  }
  return r;
}

namespace {

struct SeedData {
  SyntheticDataset data;
  std::vector<ScoreDistribution> labels;
};

std::vector<SeedData> prepare_seeds(const SweepSettings& settings, const LevelGrid& grid) {
  if (settings.seeds.empty()) throw Error(ErrorCode::kParameter, "sweep needs at least one seed");
  std::vector<SeedData> out(settings.seeds.size());
  parallel_for(
      out.size(),
      [&](std::size_t i) {
        DatasetConfig dc = settings.data;
        dc.seed = settings.seeds[i];
        out[i].data = make_dataset(dc, grid);
        out[i].labels = build_labels(out[i].data.train(), grid);
      },
      settings.threads);
  return out;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

SweepSettings sufficiency_defaults() {
  SweepSettings s;
  s.data.samples = 300;
  s.data.feature_noise = 1.0;
  s.data.label_noise = 0.5;
  s.train.learning_rate = 0.2;
  s.train.mat_steps = 300;
  s.train.sot_steps = 50;
  s.seeds = {0, 1, 2, 3, 4};
  return s;
}

SweepSettings generation_defaults() {
  SweepSettings s = sufficiency_defaults();
  s.train.mat_steps = 100;
  s.seeds = {0, 1, 2};
  return s;
}

SufficiencyResult sufficiency_sweep(const SweepSettings& settings, const LevelGrid& grid) {
  settings.train.validate();
  constexpr std::size_t kRhoSteps = 10;
  const std::vector<SeedData> seeds = prepare_seeds(settings, grid);
  const std::size_t ns = seeds.size();

  SufficiencyResult out;
  out.cells.resize(kRhoSteps * ns);
  parallel_for(
      out.cells.size(),
      [&](std::size_t c) {
        SufficiencyCell& cell = out.cells[c];
        const std::size_t ri = c / ns, si = c % ns;
        cell.rho = static_cast<double>(ri + 1) / static_cast<double>(kRhoSteps);
        cell.seed = settings.seeds[si];
        TrainConfig tc = settings.train;
        tc.seed = cell.seed;
        tc.sufficiency = cell.rho;
        try {
          const SeedData& sd = seeds[si];
          ToyModel model(shape_for(sd.data, grid, tc.hidden), derive_seed(tc.seed, kModelStream),
                         tc.init_scale);
          TrainResult tr = train(std::move(model), sd.data.train(), sd.labels, grid, tc);
          cell.eval = evaluate(tr.model, sd.data.test(), grid);
        } catch (const Error& e) {
          cell.error = e.what();
        }
      },
      settings.threads);

  std::vector<double> rhos, perf;
  for (std::size_t ri = 0; ri < kRhoSteps; ++ri) {
    SufficiencyRow row;
    row.rho = static_cast<double>(ri + 1) / static_cast<double>(kRhoSteps);
    TrainConfig tc = settings.train;
    tc.sufficiency = row.rho;
    row.supervised_positions = tc.supervised_positions(settings.data.attributes);
    std::vector<double> sr, pl;
    for (std::size_t si = 0; si < ns; ++si) {
      const SufficiencyCell& cell = out.cells[ri * ns + si];
      if (cell.eval && cell.eval->mean_correlation()) {
        sr.push_back(*cell.eval->srocc);
        pl.push_back(*cell.eval->plcc);
      }
    }
    row.seeds_ok = sr.size();
    row.mean_srocc = mean_of(sr);
    row.mean_plcc = mean_of(pl);
    if (row.mean_srocc && row.mean_plcc) {
      row.mean_correlation = 0.5 * (*row.mean_srocc + *row.mean_plcc);
      rhos.push_back(row.rho);
      perf.push_back(*row.mean_correlation);
    }
    out.rows.push_back(row);
  }
  if (rhos.size() >= 2) {
    try {
      out.rank_correlation = srocc(PairedScores(rhos, perf));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateInput) throw;
    }
  }
  return out;
}

GenerationResult generation_capability_sweep(const SweepSettings& settings,
                                             const LevelGrid& grid) {
  settings.train.validate();
  constexpr std::size_t kCheckpoints = 11;
  const std::vector<SeedData> seeds = prepare_seeds(settings, grid);
  const std::size_t ns = seeds.size();
  const TrainConfig& base = settings.train;

  std::vector<std::size_t> steps_at(kCheckpoints);
  for (std::size_t c = 0; c < kCheckpoints; ++c) {
    steps_at[c] = static_cast<std::size_t>(
        std::llround(static_cast<double>(c) / 10.0 * static_cast<double>(base.mat_steps)));
  }

  GenerationResult out;
  out.cells.resize(kCheckpoints * ns);
  // Description-only first stage per seed, snapshotting at each checkpoint.
  std::vector<std::vector<std::optional<ToyModel>>> snapshots(ns);
  parallel_for(
      ns,
      [&](std::size_t si) {
        const SeedData& sd = seeds[si];
        const std::uint64_t seed = settings.seeds[si];
        ToyModel model(shape_for(sd.data, grid, base.hidden), derive_seed(seed, kModelStream),
                       base.init_scale);
        snapshots[si].resize(kCheckpoints);
        std::size_t done = 0;
        std::string failure;
        for (std::size_t c = 0; c < kCheckpoints; ++c) {
          GenerationCell& cell = out.cells[c * ns + si];
          cell.fraction = static_cast<double>(c) / 10.0;
          cell.seed = seed;
          cell.mat_steps = steps_at[c];
          if (!failure.empty()) {
            cell.error = failure;
            continue;
          }
          TrainConfig tc = base;
          tc.seed = seed;
          tc.mat_enabled = true;
          tc.score_in_mat = false;
          tc.mat_steps = steps_at[c] - done;
          tc.sot_steps = 0;
          try {
            model = train(std::move(model), sd.data.train(), sd.labels, grid, tc).model;
            done = steps_at[c];
            cell.description_ce = description_ce(model, sd.data.train());
            snapshots[si][c] = model;
          } catch (const Error& e) {
            failure = e.what();
            cell.error = failure;
          }
        }
      },
      settings.threads);

  parallel_for(
      out.cells.size(),
      [&](std::size_t idx) {
        GenerationCell& cell = out.cells[idx];
        const std::size_t c = idx / ns, si = idx % ns;
        if (!snapshots[si][c]) return;
        TrainConfig tc = base;
        tc.seed = cell.seed;
        tc.mat_enabled = false;
        try {
          const SeedData& sd = seeds[si];
          TrainResult tr = train(*snapshots[si][c], sd.data.train(), sd.labels, grid, tc);
          cell.eval = evaluate(tr.model, sd.data.test(), grid);
        } catch (const Error& e) {
          cell.error = e.what();
        }
      },
      settings.threads);

  for (std::size_t si = 0; si < ns; ++si) {
    for (std::size_t c = 1; c < kCheckpoints; ++c) {
      const GenerationCell& prev = out.cells[(c - 1) * ns + si];
      const GenerationCell& cur = out.cells[c * ns + si];
      if (prev.error.empty() && snapshots[si][c] && cur.description_ce > prev.description_ce) {
        ++out.ce_increase_violations;
      }
    }
  }

  std::vector<double> ces, perf;
  for (std::size_t c = 0; c < kCheckpoints; ++c) {
    GenerationRow row;
    row.fraction = static_cast<double>(c) / 10.0;
    row.mat_steps = steps_at[c];
    std::vector<double> ce, mc;
    for (std::size_t si = 0; si < ns; ++si) {
      const GenerationCell& cell = out.cells[c * ns + si];
      if (!snapshots[si][c]) continue;
      ce.push_back(cell.description_ce);
      if (cell.eval && cell.eval->mean_correlation()) mc.push_back(*cell.eval->mean_correlation());
    }
    row.seeds_ok = mc.size();
    row.description_ce = mean_of(ce).value_or(std::numeric_limits<double>::quiet_NaN());
    row.mean_correlation = mean_of(mc);
    if (row.mean_correlation && std::isfinite(row.description_ce)) {
      ces.push_back(row.description_ce);
      perf.push_back(*row.mean_correlation);
    }
    out.rows.push_back(row);
  }
  if (ces.size() >= 2) {
    try {
      out.ce_performance_correlation = pearson(ces, perf);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateInput) throw;
    }
  }
  return out;
}

}  // namespace levelscore::toy
