#pragma once

// Markov-chain basket generator: alternate support-proportional corruption with
// Bernoulli sampling from the reconstruction probabilities.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "basket_dae/corruption.hpp"
#include "basket_dae/data.hpp"
#include "basket_dae/errors.hpp"
#include "basket_dae/format.hpp"
#include "basket_dae/model.hpp"
#include "basket_dae/network.hpp"
#include "basket_dae/random.hpp"

namespace basket_dae {

/// Independent Bernoulli(y_i) draw for each item.
inline Basket sample_bernoulli(const Vector& y, Rng& rng) {
  Basket out(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) out.set(static_cast<std::size_t>(i), rng.bernoulli(y(i)));
  return out;
}

inline Basket sample_reconstruction(const DaeModel& model, const Basket& x_tilde, Rng& rng) {
  return sample_bernoulli(forward(model.params, x_tilde).y, rng);
}

/// Draws from Bernoulli(y) until the result is nonempty.
inline Basket sample_nonempty(const Vector& y, Rng& rng, std::size_t max_attempts,
                              std::size_t step) {
  for (std::size_t a = 0; a < max_attempts; ++a) {
    Basket b = sample_bernoulli(y, rng);
    if (!b.is_empty()) return b;
  }
  throw ChainError("reconstruction stayed empty after " + std::to_string(max_attempts) +
                       " draws at chain step " + std::to_string(step),
                   step);
}

struct ChainState {
  Basket current;
  std::size_t step = 0;
};

/// x~ ~ C(.|x), then x' ~ Bernoulli(y(x~)) with all-zero x' redrawn from the same y.
inline ChainState chain_step(const DaeModel& model, const CorruptionProcess& proc,
                             const ChainState& state, Rng& rng) {
  if (state.current.size() != model.p()) throw DimensionError("chain state length differs from p");
  if (state.current.is_empty())
    throw ChainError("chain state is empty at step " + std::to_string(state.step), state.step);
  Basket xt;
  try {
    xt = proc.corrupt(state.current, rng);
  } catch (const CorruptionError& e) {
    throw ChainError(std::string(e.what()) + " at chain step " + std::to_string(state.step),
                     state.step);
  }
  const Vector y = forward(model.params, xt).y;
  return {sample_nonempty(y, rng, proc.max_rejections(), state.step + 1), state.step + 1};
}

inline ChainState chain_step(const DaeModel& model, const ChainState& state, Rng& rng) {
  return chain_step(model, corruption_for(model), state, rng);
}

enum class InitMode { dataset, product };

struct GenConfig {
  std::size_t burn_in = 100;
  std::size_t n_samples = 1000;
  std::size_t thinning = 10;
  std::size_t chains = 1;
  InitMode init = InitMode::dataset;
  std::uint64_t seed = 42;

  void validate() const {
    if (n_samples < 1) throw ConfigError("n_samples must be at least 1");
    if (thinning < 1) throw ConfigError("thinning must be at least 1");
    if (chains < 1) throw ConfigError("chains must be at least 1");
  }
};

/// Initial state: a uniformly chosen nonempty basket from `source`, or in product
/// mode an independent Bernoulli(pi_i) draw per item (all-zero rejected).
inline Basket initial_state(const DaeModel& model, std::span<const Basket> nonempty_source,
                            InitMode mode, Rng& rng) {
  if (mode == InitMode::dataset)
    return nonempty_source[static_cast<std::size_t>(rng.below(nonempty_source.size()))];
  const Vector pi = Eigen::Map<const Vector>(model.supports.pi.data(),
                                             static_cast<Eigen::Index>(model.supports.size()));
  try {
    return sample_nonempty(pi, rng, CorruptionProcess::default_max_rejections, 0);
  } catch (const ChainError&) {
    throw ChainError("product initialization kept producing empty baskets", 0);
  }
}

/// Runs `cfg.chains` independent chains (one substream each). Each chain does
/// burn_in steps, then emits its state after every `thinning` further steps.
/// Output order is chain by chain.
inline Dataset generate(const DaeModel& model, const Dataset& init_source, const GenConfig& cfg) {
  cfg.validate();
  if (init_source.catalog.size() != model.p())
    throw DimensionError("initialization dataset does not match the model catalog");
  std::vector<Basket> source;
  for (const auto& b : init_source.baskets)
    if (!b.is_empty()) source.push_back(b);
  if (source.empty() && cfg.init == InitMode::dataset)
    throw ConfigError("initialization dataset has no nonempty baskets");

  const auto proc = corruption_for(model);
  Dataset out{model.catalog, {}};
  out.baskets.reserve(cfg.n_samples);
  const std::size_t per_chain = cfg.n_samples / cfg.chains;
  const std::size_t extra = cfg.n_samples % cfg.chains;
  for (std::size_t c = 0; c < cfg.chains; ++c) {
    const std::size_t quota = per_chain + (c < extra ? 1 : 0);
    if (quota == 0) continue;
    Rng rng = Rng::substream(cfg.seed, c);
    ChainState state{initial_state(model, source, cfg.init, rng), 0};
    for (std::size_t s = 0; s < cfg.burn_in; ++s) state = chain_step(model, proc, state, rng);
    for (std::size_t k = 0; k < quota; ++k) {
      for (std::size_t s = 0; s < cfg.thinning; ++s) state = chain_step(model, proc, state, rng);
      out.baskets.push_back(state.current);
    }
  }
  return out;
}

struct FrequencyRow {
  std::string label;
  double train_freq = 0.0;
  double gen_freq = 0.0;
  double abs_diff = 0.0;
};

/// Per-item marginal frequencies, sorted by training frequency (descending,
/// catalog order on ties).
inline std::vector<FrequencyRow> frequency_report(const Dataset& generated, const Dataset& train) {
  if (!(generated.catalog == train.catalog))
    throw DimensionError("frequency report: datasets use different catalogs");
  const auto gen = item_frequencies(generated);
  const auto tr = item_frequencies(train);
  std::vector<FrequencyRow> rows;
  rows.reserve(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i)
    rows.push_back({train.catalog.name(i), tr[i], gen[i], std::abs(tr[i] - gen[i])});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.train_freq > b.train_freq; });
  return rows;
}

inline void write_frequency_csv(std::ostream& out, const std::vector<FrequencyRow>& rows) {
  out << "label,train_freq,gen_freq,abs_diff\n";
  for (const auto& r : rows)
    out << r.label << ',' << to_shortest(r.train_freq) << ',' << to_shortest(r.gen_freq) << ','
        << to_shortest(r.abs_diff) << '\n';
}

}  // namespace basket_dae
