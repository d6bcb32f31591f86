#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "basket_dae/data.hpp"
#include "basket_dae/errors.hpp"
#include "basket_dae/format.hpp"
#include "basket_dae/random.hpp"

namespace basket_dae {

/// Support-proportional removal kernel C(x~|x).
///
/// A present item i is dropped when u_i <= pi_i with u_i ~ Uniform(0,1) drawn
/// from the open interval; absent items stay absent. All-zero results are
/// rejected and the whole vector is redrawn, at most `max_rejections` times.
class CorruptionProcess {
 public:
  static constexpr std::size_t default_max_rejections = 1000;

  explicit CorruptionProcess(SupportProfile supports,
                             std::size_t max_rejections = default_max_rejections)
      : supports_(std::move(supports)), max_rejections_(max_rejections) {
    if (max_rejections_ < 1) throw ConfigError("max_rejections must be at least 1");
    for (double pi : supports_.pi)
      if (!(pi >= 0.0 && pi <= 1.0)) throw ConfigError("support outside [0,1]");
  }

  const SupportProfile& supports() const noexcept { return supports_; }
  std::size_t max_rejections() const noexcept { return max_rejections_; }
  std::size_t p() const noexcept { return supports_.size(); }

  /// One unconditioned draw; may be all-zero.
  Basket draw_raw(const Basket& x, Rng& rng) const {
    Basket out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i]) out.set(i, !(rng.uniform_open() <= supports_[i]));
    return out;
  }

  Basket corrupt(const Basket& x, Rng& rng) const {
    if (x.size() != p())
      throw DimensionError("basket length " + std::to_string(x.size()) +
                           " differs from support length " + std::to_string(p()));
    if (x.is_empty()) throw PreconditionError("cannot corrupt an empty basket");
    for (std::size_t attempt = 1; attempt <= max_rejections_; ++attempt) {
      Basket out = draw_raw(x, rng);
      if (!out.is_empty()) return out;
    }
    throw CorruptionError("corruption rejected " + std::to_string(max_rejections_) +
                              " consecutive all-zero draws",
                          max_rejections_);
  }

  /// Probability of the raw (pre-rejection) draw `x_tilde` given clean `x`.
  double raw_probability(const Basket& x, const Basket& x_tilde) const {
    double prob = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!x[i]) {
        if (x_tilde[i]) return 0.0;
        continue;
      }
      prob *= x_tilde[i] ? (1.0 - supports_[i]) : supports_[i];
    }
    return prob;
  }

 private:
  SupportProfile supports_;
  std::size_t max_rejections_;
};

/// Per-item removal frequency: share of (basket, trial) pairs with x_i = 1 that
/// end up with x~_i = 0. Items never present report 0. Empty baskets are skipped.
inline std::vector<double> removal_rate(const CorruptionProcess& proc, const Dataset& ds,
                                        std::size_t trials, Rng& rng) {
  if (trials < 1) throw ConfigError("removal_rate needs at least one trial");
  std::vector<double> present(proc.p(), 0.0), removed(proc.p(), 0.0);
  for (std::size_t t = 0; t < trials; ++t) {
    for (const auto& x : ds.baskets) {
      if (x.is_empty()) continue;
      const Basket xt = proc.corrupt(x, rng);
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (!x[i]) continue;
        present[i] += 1.0;
        if (!xt[i]) removed[i] += 1.0;
      }
    }
  }
  std::vector<double> rate(proc.p(), 0.0);
  for (std::size_t i = 0; i < rate.size(); ++i)
    if (present[i] > 0.0) rate[i] = removed[i] / present[i];
  return rate;
}

/// CSV `label,pi,observed_rate`.
inline void write_removal_csv(std::ostream& out, const ItemCatalog& catalog,
                              const CorruptionProcess& proc, const std::vector<double>& rates) {
  if (catalog.size() != proc.p() || rates.size() != proc.p())
    throw DimensionError("removal report: catalog, supports and rates must share length");
  out << "label,pi,observed_rate\n";
  for (std::size_t i = 0; i < catalog.size(); ++i)
    out << catalog.name(i) << ',' << to_shortest(proc.supports()[i]) << ','
        << to_shortest(rates[i]) << '\n';
}

}  // namespace basket_dae
