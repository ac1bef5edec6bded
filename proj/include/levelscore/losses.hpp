#pragma once

// Training objectives, all in nats.
//
//   sequence_ce   token cross-entropy of a description sequence
//   kl_divergence KL(target || predicted) between score distributions
//   score_ce      hard-label CE on the level nearest to the ground truth
//   asl_loss      score_ce + k * kl_divergence
//   mat_loss      description_ce + k_asl * asl
//
// A zero probability on required support yields +inf with a flag set rather
// than an exception, so training code can report the step that diverged.

#include <cstddef>
#include <span>
#include <vector>

#include "levelscore/score_lattice.hpp"

namespace levelscore {

struct LossWeights {
  double k = 1.0;
  double k_asl = 1.0;

  void validate() const;
};

struct LossValue {
  double value = 0.0;
  bool diverged = false;  // infinite because required support had zero mass
};

struct SequenceCe {
  double sum = 0.0;
  double mean = 0.0;
  bool diverged = false;
};

SequenceCe sequence_ce(std::span<const std::vector<double>> predicted_token_dists,
                       std::span<const std::size_t> target_tokens);

LossValue kl_divergence(const ScoreDistribution& target, const ScoreDistribution& predicted);

LossValue score_ce(const ScoreDistribution& predicted, double x_gt, const LevelGrid& grid);

LossValue asl_loss(const ScoreDistribution& predicted, const ScoreDistribution& target,
                   double x_gt, const LevelGrid& grid, const LossWeights& weights);

double mat_loss(double description_ce, double asl, const LossWeights& weights);

// Logit-space forms used by the trainer. For predicted = softmax(logits):
//   d KL(t || softmax(z)) / dz = softmax(z) - t
//   d (-log softmax(z)_i)  / dz = softmax(z) - e_i

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

double kl_divergence_from_logits(std::span<const double> target, std::span<const double> logits);
void kl_logit_gradient(std::span<const double> target, std::span<const double> logits,
                       std::span<double> grad);

double score_ce_from_logits(std::span<const double> logits, std::size_t target_index);
void score_ce_logit_gradient(std::span<const double> logits, std::size_t target_index,
                             std::span<double> grad);

}  // namespace levelscore
