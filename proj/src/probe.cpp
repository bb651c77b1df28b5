#include "cog/probe.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "cog/error.hpp"
#include "cog/parallel.hpp"

namespace cog {

namespace {

// Stream ids for derive_seed so each consumer of a seed draws independently.
enum Stream : std::uint64_t {
  kSplitStream = 0x51,
  kSamplerStream = 0x52,
  kTrialStream = 0x53,
  kSubsampleStream = 0x61,
  kSearchStream = 0x62,
  kFinalStream = 0x63,
};

std::vector<double> to_double(const FeatureTable& t) {
  return {t.values.begin(), t.values.end()};
}

// Adds the unscaled cross-entropy gradient of `rows` into grad_w / grad_b
// and returns the summed loss. Rows are visited in the given order.
double accumulate_batch(const LinearModel& m, const double* x, const std::uint32_t* labels,
                        std::span<const std::size_t> rows, double* grad_w, double* grad_b,
                        std::vector<double>& scratch) {
  const std::size_t c_count = m.classes;
  const std::size_t dim = m.dim;
  scratch.resize(c_count);
  double total = 0.0;
  for (std::size_t r : rows) {
    const double* xr = x + r * dim;
    const std::size_t y = labels[r];
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c_count; ++k) {
      const double* w = m.weights.data() + k * dim;
      double z = m.bias[k];
      for (std::size_t j = 0; j < dim; ++j) z += w[j] * xr[j];
      scratch[k] = z;
      max_logit = std::max(max_logit, z);
    }
    const double label_logit = scratch[y];
    double sum = 0.0;
    for (std::size_t k = 0; k < c_count; ++k) {
      scratch[k] = std::exp(scratch[k] - max_logit);
      sum += scratch[k];
    }
    total += std::log(sum) + max_logit - label_logit;
    for (std::size_t k = 0; k < c_count; ++k) {
      const double g = scratch[k] / sum - (k == y ? 1.0 : 0.0);
      grad_b[k] += g;
      double* gw = grad_w + k * dim;
      for (std::size_t j = 0; j < dim; ++j) gw[j] += g * xr[j];
    }
  }
  return total;
}

double squared_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void check_classes_present(const FeatureTable& t) {
  std::vector<char> present(t.num_classes(), 0);
  for (auto l : t.labels) present[l] = 1;
  for (std::size_t k = 0; k < present.size(); ++k) {
    if (!present[k]) {
      throw Error(ErrorCode::MissingClass, "class " + std::to_string(k) + " ('" + t.concepts[k] + "') has no training rows");
    }
  }
}

std::vector<std::vector<std::size_t>> rows_by_class(const FeatureTable& t) {
  std::vector<std::vector<std::size_t>> out(t.num_classes());
  for (std::size_t i = 0; i < t.rows; ++i) out[t.labels[i]].push_back(i);
  return out;
}

}  // namespace

void ProbeConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "probe config: " + what); };
  if (batch_size == 0) fail("batch_size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must be in [0, 1)");
  if (epochs == 0) fail("epochs must be >= 1");
  if (trials == 0) fail("trials must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) fail("val_fraction must be in (0, 1)");
  if (seeds == 0) fail("seeds must be >= 1");
  if (!(lr_min > 0.0 && lr_min < lr_max)) fail("lr range must be positive with low < high");
  if (!(wd_min > 0.0 && wd_min < wd_max)) fail("wd range must be positive with low < high");
  if (shot_counts.empty()) fail("shot_counts must not be empty");
  if (!(divergence_loss > 0.0)) fail("divergence_loss must be positive");
}

std::string shots_label(std::size_t shots) { return shots == kAllShots ? "all" : std::to_string(shots); }

LinearModel LinearModel::zeros(std::size_t classes, std::size_t dim) {
  return {classes, dim, std::vector<double>(classes * dim, 0.0), std::vector<double>(classes, 0.0)};
}

std::size_t LinearModel::predict(std::span<const float> x) const {
  std::size_t best = 0;
  double best_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < classes; ++k) {
    const double* w = weights.data() + k * dim;
    double z = bias[k];
    for (std::size_t j = 0; j < dim; ++j) z += w[j] * static_cast<double>(x[j]);
    if (z > best_logit) {
      best_logit = z;
      best = k;
    }
  }
  return best;
}

LossAndGradient softmax_cross_entropy(const LinearModel& model, const FeatureTable& data,
                                      std::span<const std::size_t> rows, double wd) {
  if (model.dim != data.dim) throw Error(ErrorCode::DimensionMismatch, "model and data dimensions differ");
  LossAndGradient out;
  out.grad_weights.assign(model.weights.size(), 0.0);
  out.grad_bias.assign(model.classes, 0.0);
  if (rows.empty()) return out;
  const auto x = to_double(data);
  std::vector<double> scratch;
  const double ce = accumulate_batch(model, x.data(), data.labels.data(), rows, out.grad_weights.data(),
                                     out.grad_bias.data(), scratch);
  const auto n = static_cast<double>(rows.size());
  out.loss = ce / n + 0.5 * wd * squared_norm(model.weights);
  for (std::size_t i = 0; i < out.grad_weights.size(); ++i) {
    out.grad_weights[i] = out.grad_weights[i] / n + wd * model.weights[i];
  }
  for (auto& g : out.grad_bias) g /= n;
  return out;
}

TrainOutcome train_logreg(const FeatureTable& train, double lr, double wd, const ProbeConfig& cfg,
                          std::uint64_t seed) {
  if (train.rows == 0) throw Error(ErrorCode::MissingClass, "empty training table");
  check_classes_present(train);

  TrainOutcome out;
  out.model = LinearModel::zeros(train.num_classes(), train.dim);
  LinearModel& m = out.model;
  const auto x = to_double(train);
  std::vector<double> grad_w(m.weights.size()), grad_b(m.classes);
  std::vector<double> vel_w(m.weights.size(), 0.0), vel_b(m.classes, 0.0);
  std::vector<double> scratch;
  std::vector<std::size_t> order(train.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);

  auto diverged = [&](std::size_t epoch, double loss) {
    return Error(ErrorCode::DivergedLoss, "loss " + std::to_string(loss) + " at epoch " + std::to_string(epoch + 1) +
                                              " (lr=" + std::to_string(lr) + ")");
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);
      const double ce = accumulate_batch(m, x.data(), train.labels.data(), batch, grad_w.data(), grad_b.data(), scratch);
      const auto b = static_cast<double>(batch.size());
      const double loss = ce / b + 0.5 * wd * squared_norm(m.weights);
      if (!std::isfinite(loss) || loss > cfg.divergence_loss) throw diverged(epoch, loss);
      epoch_sum += loss * b;

      for (std::size_t i = 0; i < m.weights.size(); ++i) {
        vel_w[i] = cfg.momentum * vel_w[i] + (grad_w[i] / b + wd * m.weights[i]);
        m.weights[i] -= lr * vel_w[i];
      }
      for (std::size_t k = 0; k < m.classes; ++k) {
        vel_b[k] = cfg.momentum * vel_b[k] + grad_b[k] / b;
        m.bias[k] -= lr * vel_b[k];
      }
    }
    out.epoch_loss.push_back(epoch_sum / static_cast<double>(order.size()));
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(m.weights.begin(), m.weights.end(), finite) || !std::all_of(m.bias.begin(), m.bias.end(), finite)) {
    throw diverged(cfg.epochs - 1, std::numeric_limits<double>::infinity());
  }
  return out;
}

double evaluate_top1(const LinearModel& model, const FeatureTable& test) {
  if (test.rows == 0) throw Error(ErrorCode::EmptyTestSet, "test table has no rows");
  if (model.dim != test.dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "model expects d=" + std::to_string(model.dim) + ", test has d=" + std::to_string(test.dim));
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.rows; ++i) {
    if (model.predict(test.row(i)) == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.rows);
}

LogUniformSampler::LogUniformSampler(const ProbeConfig& cfg, std::uint64_t seed)
    : rng_(seed), lr_min_(cfg.lr_min), lr_max_(cfg.lr_max), wd_min_(cfg.wd_min), wd_max_(cfg.wd_max) {}

HyperPair LogUniformSampler::next(std::span<const TrialResult>) {
  HyperPair p;
  p.lr = rng_.log_uniform(lr_min_, lr_max_);
  p.wd = rng_.log_uniform(wd_min_, wd_max_);
  return p;
}

SearchOutcome hyper_search(const FeatureTable& train, const ProbeConfig& cfg, std::uint64_t seed,
                           HyperSampler* sampler) {
  cfg.validate();
  check_classes_present(train);
  SearchOutcome out;

  const auto by_class = rows_by_class(train);
  out.val_is_train = std::any_of(by_class.begin(), by_class.end(), [](const auto& rows) { return rows.size() < 2; });
  FeatureTable fit_part, val_part;
  if (out.val_is_train) {
    fit_part = train;
    val_part = train;
  } else {
    std::vector<std::size_t> fit_rows, val_rows;
    for (std::size_t k = 0; k < by_class.size(); ++k) {
      auto rows = by_class[k];
      Rng rng(derive_seed(seed, {kSplitStream, k}));
      rng.shuffle(rows);
      const auto want = static_cast<std::size_t>(std::floor(cfg.val_fraction * static_cast<double>(rows.size())));
      const std::size_t n_val = std::clamp<std::size_t>(want, 1, rows.size() - 1);
      val_rows.insert(val_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
      fit_rows.insert(fit_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
    }
    std::sort(fit_rows.begin(), fit_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    fit_part = select_rows(train, fit_rows);
    val_part = select_rows(train, val_rows);
  }

  LogUniformSampler default_sampler(cfg, derive_seed(seed, {kSamplerStream}));
  HyperSampler& s = sampler ? *sampler : default_sampler;
  for (std::size_t i = 0; i < cfg.trials; ++i) {
    const HyperPair pair = s.next(out.trials);
    TrialResult trial;
    trial.lr = pair.lr;
    trial.wd = pair.wd;
    trial.seed = derive_seed(seed, {kTrialStream, i});
    try {
      const auto fit = train_logreg(fit_part, pair.lr, pair.wd, cfg, trial.seed);
      trial.val_top1 = evaluate_top1(fit.model, val_part);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DivergedLoss) throw;
      trial.diverged = true;
      trial.val_top1 = 0.0;
    }
    out.trials.push_back(trial);
  }

  const TrialResult* best = &out.trials.front();
  for (const auto& t : out.trials) {
    const bool better = t.val_top1 > best->val_top1 ||
                        (t.val_top1 == best->val_top1 && (t.lr < best->lr || (t.lr == best->lr && t.wd < best->wd)));
    if (better) best = &t;
  }
  out.best = {best->lr, best->wd};
  out.best_val_top1 = best->val_top1;
  return out;
}

FeatureTable fewshot_subsample(const FeatureTable& train, std::size_t shots, std::uint64_t seed,
                               std::size_t* clamped_classes) {
  if (clamped_classes) *clamped_classes = 0;
  if (shots == kAllShots) return train;
  std::vector<std::size_t> keep;
  std::size_t clamped = 0;
  auto by_class = rows_by_class(train);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& rows = by_class[k];
    if (rows.size() < shots) ++clamped;
    Rng rng(derive_seed(seed, {k}));
    rng.shuffle(rows);
    const std::size_t take = std::min(shots, rows.size());
    keep.insert(keep.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
  }
  if (clamped > 0) spdlog::warn("{} classes have fewer than {} training rows; using all of theirs", clamped, shots);
  if (clamped_classes) *clamped_classes = clamped;
  std::sort(keep.begin(), keep.end());
  return select_rows(train, keep);
}

std::size_t ProbeResult::failed_units() const {
  return static_cast<std::size_t>(std::count_if(units.begin(), units.end(), [](const UnitResult& u) { return !u.ok; }));
}

bool ProbeResult::any_cell_failed() const {
  return std::any_of(aggregates.begin(), aggregates.end(), [](const AggregateResult& a) { return a.ok_seeds == 0; });
}

ProbeResult run_protocol(std::span<const LevelData> levels, const ProbeConfig& cfg, std::uint64_t global_seed,
                         unsigned jobs) {
  cfg.validate();
  ProbeResult result;
  for (const auto& level : levels) result.level_names.push_back(level.name);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    for (std::size_t shots : cfg.shot_counts) {
      for (std::size_t s = 0; s < cfg.seeds; ++s) {
        UnitResult u;
        u.level = l;
        u.shots = shots;
        u.seed_index = s;
        result.units.push_back(u);
      }
    }
  }

  parallel_for(result.units.size(), jobs, [&](std::size_t i) {
    UnitResult& u = result.units[i];
    const LevelData& level = levels[u.level];
    const auto started = std::chrono::steady_clock::now();
    const std::uint64_t unit_seed = derive_seed(global_seed, {u.level, u.shots, u.seed_index});
    try {
      const auto sub = fewshot_subsample(level.train, u.shots, derive_seed(unit_seed, {kSubsampleStream}),
                                         &u.clamped_classes);
      const auto search = hyper_search(sub, cfg, derive_seed(unit_seed, {kSearchStream}));
      u.lr = search.best.lr;
      u.wd = search.best.wd;
      u.val_top1 = search.best_val_top1;
      u.val_is_train = search.val_is_train;
      u.diverged_trials = static_cast<std::size_t>(
          std::count_if(search.trials.begin(), search.trials.end(), [](const TrialResult& t) { return t.diverged; }));
      const auto final_fit = train_logreg(sub, u.lr, u.wd, cfg, derive_seed(unit_seed, {kFinalStream}));
      u.test_top1 = evaluate_top1(final_fit.model, level.test);
      u.ok = true;
    } catch (const Error& e) {
      u.ok = false;
      u.error = e.what();
      spdlog::warn("level {} shots {} seed {} failed: {}", level.name, shots_label(u.shots), u.seed_index, e.what());
    }
    u.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  });

  for (std::size_t i = 0; i < result.units.size(); i += cfg.seeds) {
    AggregateResult agg;
    agg.level = result.units[i].level;
    agg.shots = result.units[i].shots;
    std::vector<double> scores;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      const auto& u = result.units[i + s];
      if (u.ok) {
        scores.push_back(u.test_top1);
      } else {
        ++agg.failed_seeds;
      }
    }
    agg.ok_seeds = scores.size();
    if (!scores.empty()) {
      const double n = static_cast<double>(scores.size());
      double sum = 0.0;
      for (double v : scores) sum += v;
      agg.mean_top1 = sum / n;
      double sq = 0.0;
      for (double v : scores) sq += (v - agg.mean_top1) * (v - agg.mean_top1);
      agg.std_top1 = std::sqrt(sq / n);
    }
    result.aggregates.push_back(agg);
  }
  return result;
}

}  // namespace cog
