#pragma once

// Minibatch Adam training of the DAE on freshly corrupted baskets, with optional
// walkback augmentation, periodic checkpoints and hyperparameter sweeps.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "basket_dae/corruption.hpp"
#include "basket_dae/data.hpp"
#include "basket_dae/errors.hpp"
#include "basket_dae/evaluation.hpp"
#include "basket_dae/format.hpp"
#include "basket_dae/generation.hpp"
#include "basket_dae/model.hpp"
#include "basket_dae/network.hpp"
#include "basket_dae/optimizer.hpp"
#include "basket_dae/random.hpp"

namespace basket_dae {

struct WalkbackConfig {
  bool enabled = false;
  std::size_t k = 3;
  double fraction = 0.5;
};

struct TrainConfig {
  std::size_t n_hidden = 100;
  std::size_t batch_size = 64;
  std::size_t rounds = 50000;
  AdamConfig adam{};
  ClipSchedule clip{};
  WalkbackConfig walkback{};
  std::size_t eval_every = 1000;
  double eta = 0.5;
  std::size_t max_rejections = CorruptionProcess::default_max_rejections;
  std::uint64_t seed = 42;

  void validate() const {
    if (n_hidden < 1) throw ConfigError("hidden size must be at least 1");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (rounds < 1) throw ConfigError("rounds must be at least 1");
    if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0,1]");
    if (max_rejections < 1) throw ConfigError("max_rejections must be at least 1");
    if (walkback.enabled && walkback.k < 1) throw ConfigError("walkback k must be at least 1");
    if (!(walkback.fraction >= 0.0 && walkback.fraction <= 1.0))
      throw ConfigError("walkback fraction must lie in [0,1]");
    adam.validate();
    clip.validate();
  }
};

struct TrainRecord {
  std::size_t step = 0;
  double train_loss = 0.0;
  double eval_loss = 0.0;
  double misclass_rate = 0.0;
};

/// Checkpoints with strictly increasing steps. Losses are mean per-basket
/// cross-entropy; train_loss at step 0 is measured on a fixed corrupted sample of
/// the training set, afterwards it is the mean over the last 100 minibatches.
struct TrainLog {
  std::vector<TrainRecord> records;
};

struct TrainResult {
  DaeModel model;
  TrainLog log;
};

inline void write_train_log_csv(std::ostream& out, const TrainLog& log) {
  out << "step,train_loss,eval_loss,misclass_rate\n";
  for (const auto& r : log.records)
    out << r.step << ',' << to_decimal(r.train_loss) << ',' << to_decimal(r.eval_loss) << ','
        << to_decimal(r.misclass_rate) << '\n';
}

inline std::vector<Basket> nonempty_baskets(const Dataset& ds) {
  std::vector<Basket> out;
  out.reserve(ds.size());
  for (const auto& b : ds.baskets)
    if (!b.is_empty()) out.push_back(b);
  return out;
}

/// Corrupted inputs visited by a k-step corrupt/reconstruct chain started at x:
/// x~(1) = C(x), x(1) ~ P(.|x~(1)), x~(2) = C(x(1)), ... up to x~(k). Every
/// entry is meant to be paired with the clean x as its target.
inline std::vector<Basket> walkback_samples(const DaeParams& params, const CorruptionProcess& proc,
                                            const Basket& x, std::size_t k, Rng& rng) {
  if (k < 1) throw ConfigError("walkback needs at least one step");
  std::vector<Basket> inputs;
  inputs.reserve(k);
  Basket state = x;
  for (std::size_t j = 0; j < k; ++j) {
    inputs.push_back(proc.corrupt(state, rng));
    if (j + 1 < k)
      state = sample_nonempty(forward(params, inputs.back()).y, rng, proc.max_rejections(), j + 1);
  }
  return inputs;
}

inline std::vector<Basket> walkback_samples(const DaeModel& model, const Basket& x, std::size_t k,
                                            Rng& rng) {
  return walkback_samples(model.params, corruption_for(model), x, k, rng);
}

namespace detail {

inline Matrix stack_columns(std::span<const Basket> baskets, std::size_t p) {
  Matrix m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(baskets.size()));
  for (std::size_t c = 0; c < baskets.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = to_vector(baskets[c]);
  return m;
}

inline double mean_loss(const DaeParams& params, std::span<const Basket> clean,
                        std::span<const Basket> corrupted) {
  double total = 0.0;
  for (std::size_t k = 0; k < clean.size(); ++k)
    total += loss(clean[k], forward(params, corrupted[k]).y);
  return total / static_cast<double>(clean.size());
}

}  // namespace detail

/// Fixed-seed evaluation of `model` on the nonempty baskets of `ds`.
inline ConfusionMatrix evaluate_dataset(const DaeModel& model, const Dataset& ds, double eta,
                                        std::uint64_t seed, std::size_t repeats = 1) {
  const auto baskets = nonempty_baskets(ds);
  Rng rng(seed);
  return evaluate_baskets(model, baskets, eta, rng, repeats);
}

inline TrainResult train(const Dataset& train_ds, const Dataset& eval_ds, const TrainConfig& cfg) {
  cfg.validate();
  if (!(train_ds.catalog == eval_ds.catalog))
    throw ConfigError("training and evaluation sets use different catalogs");
  const auto train_set = nonempty_baskets(train_ds);
  if (train_set.empty()) throw ConfigError("training set has no nonempty baskets");
  const auto eval_set = nonempty_baskets(eval_ds);
  if (eval_set.empty()) throw ConfigError("evaluation set has no nonempty baskets");

  const std::size_t p = train_ds.p();
  DaeModel model;
  model.catalog = train_ds.catalog;
  model.supports = estimate_supports(train_ds);
  model.eta = cfg.eta;
  model.params = init_params(p, cfg.n_hidden, mix64(cfg.seed ^ 0x1a2b3c4dULL));
  const CorruptionProcess proc(model.supports, cfg.max_rejections);

  Rng batch_rng = Rng::substream(cfg.seed, 1);
  Rng eval_rng = Rng::substream(cfg.seed, 2);
  Rng monitor_rng = Rng::substream(cfg.seed, 3);

  // Fixed corruptions so checkpoints are comparable.
  const auto eval_corrupted = draw_corruptions(proc, eval_set, eval_rng);
  const std::span<const Basket> monitor_set(train_set.data(), std::min<std::size_t>(train_set.size(), 1000));
  const auto monitor_corrupted = draw_corruptions(proc, monitor_set, monitor_rng);

  TrainLog log;
  auto checkpoint = [&](std::size_t step, double train_loss) {
    const double eval_loss = detail::mean_loss(model.params, eval_set, eval_corrupted);
    const auto ys = reconstruct_all(model, eval_corrupted);
    const double rate = misclassification_rate(confusion_from(eval_set, ys, cfg.eta));
    if (!std::isfinite(eval_loss) || !std::isfinite(train_loss))
      throw NumericError("non-finite loss at step " + std::to_string(step), step);
    log.records.push_back({step, train_loss, eval_loss, rate});
  };
  checkpoint(0, detail::mean_loss(model.params, monitor_set, monitor_corrupted));

  AdamState adam = AdamState::fresh(cfg.adam, model.params);
  const std::size_t walk_slots =
      cfg.walkback.enabled
          ? static_cast<std::size_t>(std::llround(cfg.walkback.fraction * static_cast<double>(cfg.batch_size)))
          : 0;
  const std::size_t columns = walk_slots * cfg.walkback.k + (cfg.batch_size - walk_slots);

  Matrix clean(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(columns));
  Matrix corrupted(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(columns));
  Vector weights(static_cast<Eigen::Index>(columns));
  DaeGradients grads;
  std::deque<double> window;
  double window_sum = 0.0;

  for (std::size_t step = 1; step <= cfg.rounds; ++step) {
    Eigen::Index col = 0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const Basket& x = train_set[static_cast<std::size_t>(batch_rng.below(train_set.size()))];
      const Vector xv = to_vector(x);
      if (b < walk_slots) {
        const auto inputs = walkback_samples(model.params, proc, x, cfg.walkback.k, batch_rng);
        for (const auto& xt : inputs) {
          clean.col(col) = xv;
          corrupted.col(col) = to_vector(xt);
          weights(col) = 1.0 / static_cast<double>(inputs.size());
          ++col;
        }
      } else {
        clean.col(col) = xv;
        corrupted.col(col) = to_vector(proc.corrupt(x, batch_rng));
        weights(col) = 1.0;
        ++col;
      }
    }

    const double batch_loss = batch_gradient(model.params, clean, corrupted, weights, grads);
    if (!std::isfinite(batch_loss))
      throw NumericError("non-finite training loss at step " + std::to_string(step), step);
    grads = clip(std::move(grads), cfg.clip.at(step - 1));
    try {
      adam_step(adam, model.params, grads);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (training step " + std::to_string(step) + ")", step);
    }

    const double per_basket = batch_loss / static_cast<double>(cfg.batch_size);
    window.push_back(per_basket);
    window_sum += per_basket;
    if (window.size() > 100) {
      window_sum -= window.front();
      window.pop_front();
    }
    if (step % cfg.eval_every == 0 || step == cfg.rounds)
      checkpoint(step, window_sum / static_cast<double>(window.size()));
  }
  return {std::move(model), std::move(log)};
}

struct HiddenSweepRow {
  std::size_t n_hidden = 0;
  double misclass_rate = 0.0;
};

/// One model per candidate N (all other settings and seeds identical), scored by
/// evaluate_dataset(model, eval_ds, cfg.eta, cfg.seed).
inline std::vector<HiddenSweepRow> sweep_hidden(const Dataset& train_ds, const Dataset& eval_ds,
                                                std::span<const std::size_t> candidates,
                                                const TrainConfig& base) {
  if (candidates.empty()) throw ConfigError("hidden-size sweep needs at least one candidate");
  std::vector<HiddenSweepRow> rows;
  rows.reserve(candidates.size());
  for (auto n : candidates) {
    TrainConfig cfg = base;
    cfg.n_hidden = n;
    try {
      const auto result = train(train_ds, eval_ds, cfg);
      const auto cm = evaluate_dataset(result.model, eval_ds, cfg.eta, cfg.seed);
      rows.push_back({n, misclassification_rate(cm)});
    } catch (const ConfigError& e) {
      throw ConfigError("N=" + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("N=" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

struct ThresholdRow {
  double eta = 0.0;
  double misclass_rate = 0.0;
};

struct ThresholdSweep {
  std::vector<ThresholdRow> rows;  // ascending eta
  double best_eta = 0.0;
  double best_rate = 0.0;
};

/// Miss-classification rate per threshold under one shared corruption draw.
/// The minimizing eta is reported, ties going to the smaller eta.
inline ThresholdSweep sweep_threshold(const DaeModel& model, std::span<const Basket> baskets,
                                      std::span<const double> etas, Rng& rng) {
  check_etas(etas);
  if (baskets.empty()) throw ConfigError("threshold sweep needs at least one basket");
  std::vector<double> sorted(etas.begin(), etas.end());
  std::sort(sorted.begin(), sorted.end());
  const auto corrupted = draw_corruptions(corruption_for(model), baskets, rng);
  const auto ys = reconstruct_all(model, corrupted);

  ThresholdSweep sweep;
  for (double eta : sorted) {
    const double rate = misclassification_rate(confusion_from(baskets, ys, eta));
    sweep.rows.push_back({eta, rate});
    if (sweep.rows.size() == 1 || rate < sweep.best_rate) {
      sweep.best_eta = eta;
      sweep.best_rate = rate;
    }
  }
  return sweep;
}

inline void write_hidden_sweep_csv(std::ostream& out, const std::vector<HiddenSweepRow>& rows) {
  out << "n_hidden,misclass_rate\n";
  for (const auto& r : rows) out << r.n_hidden << ',' << to_shortest(r.misclass_rate) << '\n';
}

inline void write_threshold_sweep_csv(std::ostream& out, const ThresholdSweep& sweep) {
  out << "eta,misclass_rate\n";
  for (const auto& r : sweep.rows) out << to_shortest(r.eta) << ',' << to_shortest(r.misclass_rate) << '\n';
}

}  // namespace basket_dae
