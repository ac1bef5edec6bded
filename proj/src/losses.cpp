#include "levelscore/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "levelscore/error.hpp"

namespace levelscore {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + ": sizes " + std::to_string(a) +
                                                   " and " + std::to_string(b) + " differ");
  }
}

}  // namespace

void LossWeights::validate() const {
  if (!std::isfinite(k) || !std::isfinite(k_asl) || k < 0.0 || k_asl < 0.0) {
    throw Error(ErrorCode::kParameter, "loss weights must be finite and non-negative");
  }
}

SequenceCe sequence_ce(std::span<const std::vector<double>> predicted_token_dists,
                       std::span<const std::size_t> target_tokens) {
  require_same_size(predicted_token_dists.size(), target_tokens.size(), "sequence_ce");
  if (target_tokens.empty()) throw Error(ErrorCode::kEmptyInput, "sequence_ce needs T >= 1");
  SequenceCe out;
  for (std::size_t t = 0; t < target_tokens.size(); ++t) {
    const auto& dist = predicted_token_dists[t];
    const std::size_t id = target_tokens[t];
    if (id >= dist.size()) {
      throw Error(ErrorCode::kOutOfRange, "target token " + std::to_string(id) +
                                              " outside a vocabulary of " +
                                              std::to_string(dist.size()));
    }
    const double p = dist[id];
    if (!(p > 0.0)) {
      out.diverged = true;
      out.sum = kInf;
      continue;
    }
    if (!out.diverged) out.sum -= std::log(p);
  }
  out.mean = out.sum / static_cast<double>(target_tokens.size());
  return out;
}

LossValue kl_divergence(const ScoreDistribution& target, const ScoreDistribution& predicted) {
  require_same_size(target.size(), predicted.size(), "kl_divergence");
  LossValue out;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double p = target[i];
    if (p == 0.0) continue;
    const double q = predicted[i];
    if (q == 0.0) {
      return {kInf, true};
    }
    out.value += p * std::log(p / q);
  }
  // Each term can be slightly negative after rounding even though the sum is
  // mathematically >= 0.
  out.value = std::max(out.value, 0.0);
  return out;
}

LossValue score_ce(const ScoreDistribution& predicted, double x_gt, const LevelGrid& grid) {
  require_same_size(predicted.size(), grid.size(), "score_ce");
  const std::size_t i = nearest_level(x_gt, grid);
  const double p = predicted[i];
  if (!(p > 0.0)) return {kInf, true};
  return {-std::log(p), false};
}

LossValue asl_loss(const ScoreDistribution& predicted, const ScoreDistribution& target,
                   double x_gt, const LevelGrid& grid, const LossWeights& weights) {
  weights.validate();
  const LossValue ce = score_ce(predicted, x_gt, grid);
  const LossValue kl = kl_divergence(target, predicted);
  if (kl.diverged && weights.k > 0.0) return {kInf, true};
  if (ce.diverged) return {kInf, true};
  return {ce.value + (weights.k > 0.0 ? weights.k * kl.value : 0.0), false};
}

double mat_loss(double description_ce, double asl, const LossWeights& weights) {
  weights.validate();
  if (weights.k_asl == 0.0) return description_ce;
  return description_ce + weights.k_asl * asl;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double peak = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double v : out) total += std::exp(v - peak);
  const double log_norm = peak + std::log(total);
  for (double& v : out) v -= log_norm;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double peak = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

double kl_divergence_from_logits(std::span<const double> target, std::span<const double> logits) {
  require_same_size(target.size(), logits.size(), "kl_divergence_from_logits");
  const std::vector<double> logq = log_softmax(logits);
  double kl = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] > 0.0) kl += target[i] * (std::log(target[i]) - logq[i]);
  }
  return kl;
}

void kl_logit_gradient(std::span<const double> target, std::span<const double> logits,
                       std::span<double> grad) {
  require_same_size(target.size(), logits.size(), "kl_logit_gradient");
  require_same_size(grad.size(), logits.size(), "kl_logit_gradient");
  const std::vector<double> q = softmax(logits);
  for (std::size_t i = 0; i < q.size(); ++i) grad[i] = q[i] - target[i];
}

double score_ce_from_logits(std::span<const double> logits, std::size_t target_index) {
  if (target_index >= logits.size()) {
    throw Error(ErrorCode::kOutOfRange, "score_ce target index outside the logits");
  }
  return -log_softmax(logits)[target_index];
}

void score_ce_logit_gradient(std::span<const double> logits, std::size_t target_index,
                             std::span<double> grad) {
  require_same_size(grad.size(), logits.size(), "score_ce_logit_gradient");
  if (target_index >= logits.size()) {
    throw Error(ErrorCode::kOutOfRange, "score_ce target index outside the logits");
  }
  const std::vector<double> q = softmax(logits);
  for (std::size_t i = 0; i < q.size(); ++i) grad[i] = q[i];
  grad[target_index] -= 1.0;
}

}  // namespace levelscore
