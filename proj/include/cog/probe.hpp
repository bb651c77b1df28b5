#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cog/features.hpp"
#include "cog/rng.hpp"

namespace cog {

/// Shot count meaning "every training row".
inline constexpr std::size_t kAllShots = 0;

struct ProbeConfig {
  std::size_t batch_size = 1024;
  double momentum = 0.9;
  std::size_t epochs = 100;
  std::size_t trials = 30;
  double val_fraction = 0.2;
  std::size_t seeds = 5;
  double lr_min = 1e-4;
  double lr_max = 1e1;
  double wd_min = 1e-8;
  double wd_max = 1e-2;
  std::vector<std::size_t> shot_counts{1, 2, 4, 8, 16, 32, 64, 128, kAllShots};
  /// A batch loss above this (or non-finite) aborts training as diverged.
  double divergence_loss = 1e4;

  /// Throws InvalidArgument on out-of-range fields.
  void validate() const;
};

std::string shots_label(std::size_t shots);

/// Multinomial logistic regression, weights row-major classes x dim.
struct LinearModel {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  static LinearModel zeros(std::size_t classes, std::size_t dim);

  /// Argmax logit; ties go to the smallest class index.
  std::size_t predict(std::span<const float> x) const;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> grad_weights;
  std::vector<double> grad_bias;
};

/// Mean softmax cross-entropy over `rows` plus wd * ||W||^2 / 2 (bias not
/// penalized), with its analytic gradient. This is the exact routine the
/// trainer uses per mini-batch.
LossAndGradient softmax_cross_entropy(const LinearModel& model, const FeatureTable& data,
                                      std::span<const std::size_t> rows, double wd);

struct TrainOutcome {
  LinearModel model;
  std::vector<double> epoch_loss;  // row-weighted mean batch loss per epoch
};

/// Mini-batch SGD with momentum from zero initialization, constant lr,
/// epoch order shuffled from `seed`. Update: v = m*v + (g + wd*W); W -= lr*v.
/// Throws MissingClass when some class has no rows, DivergedLoss when a
/// batch loss is non-finite or exceeds cfg.divergence_loss.
TrainOutcome train_logreg(const FeatureTable& train, double lr, double wd, const ProbeConfig& cfg,
                          std::uint64_t seed);

/// Fraction of rows whose prediction equals the label.
/// Throws EmptyTestSet, DimensionMismatch.
double evaluate_top1(const LinearModel& model, const FeatureTable& test);

struct HyperPair {
  double lr = 0.0;
  double wd = 0.0;
};

struct TrialResult {
  double lr = 0.0;
  double wd = 0.0;
  double val_top1 = 0.0;
  std::uint64_t seed = 0;
  bool diverged = false;
};

/// Proposes the next (lr, wd) given the trials so far. Random search ignores
/// the history; model-based samplers can use it.
class HyperSampler {
 public:
  virtual ~HyperSampler() = default;
  virtual HyperPair next(std::span<const TrialResult> history) = 0;
};

/// Independent log-uniform draws over the configured ranges.
class LogUniformSampler final : public HyperSampler {
 public:
  LogUniformSampler(const ProbeConfig& cfg, std::uint64_t seed);
  HyperPair next(std::span<const TrialResult> history) override;

 private:
  Rng rng_;
  double lr_min_, lr_max_, wd_min_, wd_max_;
};

struct SearchOutcome {
  HyperPair best;
  double best_val_top1 = 0.0;
  std::vector<TrialResult> trials;
  /// Set when some class had a single row so no hold-out was possible and
  /// the training rows doubled as validation rows.
  bool val_is_train = false;
};

/// Stratified hold-out of val_fraction per class (at least one row each
/// way), cfg.trials sampled pairs, argmax validation top-1 with ties to the
/// smaller lr, then the smaller wd. Diverged trials score 0.
/// A null sampler means LogUniformSampler seeded from `seed`.
SearchOutcome hyper_search(const FeatureTable& train, const ProbeConfig& cfg, std::uint64_t seed,
                           HyperSampler* sampler = nullptr);

/// Up to `shots` rows per class, drawn uniformly with per-class seeds,
/// returned in original row order. kAllShots returns the table unchanged.
/// `clamped_classes` receives how many classes had fewer than `shots` rows.
FeatureTable fewshot_subsample(const FeatureTable& train, std::size_t shots, std::uint64_t seed,
                               std::size_t* clamped_classes = nullptr);

struct LevelData {
  std::string name;
  FeatureTable train;
  FeatureTable test;
};

struct UnitResult {
  std::size_t level = 0;
  std::size_t shots = kAllShots;
  std::size_t seed_index = 0;
  bool ok = false;
  std::string error;
  double lr = 0.0;
  double wd = 0.0;
  double val_top1 = 0.0;
  double test_top1 = 0.0;
  bool val_is_train = false;
  std::size_t clamped_classes = 0;
  std::size_t diverged_trials = 0;
  double seconds = 0.0;
};

struct AggregateResult {
  std::size_t level = 0;
  std::size_t shots = kAllShots;
  double mean_top1 = std::numeric_limits<double>::quiet_NaN();
  double std_top1 = std::numeric_limits<double>::quiet_NaN();  // population std over successful seeds
  std::size_t ok_seeds = 0;
  std::size_t failed_seeds = 0;
};

struct ProbeResult {
  std::vector<std::string> level_names;
  std::vector<UnitResult> units;            // level-major, then shots, then seed
  std::vector<AggregateResult> aggregates;  // level-major, then shots

  std::size_t failed_units() const;
  /// True when some (level, shots) cell has no successful seed.
  bool any_cell_failed() const;
};

/// For every level, shot count and seed: subsample, search, retrain on the
/// whole subsample with the chosen pair, score the test table. Unit seeds
/// are derive_seed(global_seed, {level, shots, seed_index}). Failures are
/// recorded per unit. `jobs` does not change any result.
ProbeResult run_protocol(std::span<const LevelData> levels, const ProbeConfig& cfg, std::uint64_t global_seed,
                         unsigned jobs = 1);

}  // namespace cog
