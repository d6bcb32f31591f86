#pragma once

// Thresholded reconstruction quality with "missing" as the positive class:
// a position is observed-missing when the clean basket lacks the item and
// predicted-missing when y_i <= eta.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <span>
#include <sstream>
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

/// y_hat_i = 1 iff y_i > eta.
inline Basket discretize(const Vector& y, double eta) {
  Basket out(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) out.set(static_cast<std::size_t>(i), y(i) > eta);
  return out;
}

struct ConfusionMatrix {
  std::uint64_t tp = 0;  // observed missing, predicted missing
  std::uint64_t fn = 0;  // observed missing, predicted present
  std::uint64_t fp = 0;  // observed present, predicted missing
  std::uint64_t tn = 0;  // observed present, predicted present

  std::uint64_t observed_missing() const noexcept { return tp + fn; }
  std::uint64_t observed_present() const noexcept { return fp + tn; }
  std::uint64_t predicted_missing() const noexcept { return tp + fp; }
  std::uint64_t predicted_present() const noexcept { return fn + tn; }
  std::uint64_t total() const noexcept { return tp + fn + fp + tn; }

  void add(const Basket& clean, const Basket& predicted) {
    if (clean.size() != predicted.size()) throw DimensionError("confusion: length mismatch");
    for (std::size_t i = 0; i < clean.size(); ++i) {
      const bool missing = !clean[i];
      const bool predicted_missing = !predicted[i];
      if (missing)
        ++(predicted_missing ? tp : fn);
      else
        ++(predicted_missing ? fp : tn);
    }
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept {
    tp += o.tp;
    fn += o.fn;
    fp += o.fp;
    tn += o.tn;
    return *this;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Rates {
  double fpr = 0.0;
  double tpr = 0.0;
};

inline Rates rates(const ConfusionMatrix& cm) {
  if (cm.observed_missing() == 0)
    throw UndefinedRateError("TPR undefined: no observed-missing positions");
  if (cm.observed_present() == 0)
    throw UndefinedRateError("FPR undefined: no observed-present positions");
  return {static_cast<double>(cm.fp) / static_cast<double>(cm.observed_present()),
          static_cast<double>(cm.tp) / static_cast<double>(cm.observed_missing())};
}

inline double misclassification_rate(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw UndefinedRateError("miss-classification rate of an empty matrix");
  return static_cast<double>(cm.fp + cm.fn) / static_cast<double>(cm.total());
}

/// One corruption per basket, drawn from per-basket substreams of a base seed
/// taken from `rng`, so the realization does not depend on evaluation order.
inline std::vector<Basket> draw_corruptions(const CorruptionProcess& proc,
                                            std::span<const Basket> baskets, Rng& rng) {
  const std::uint64_t base = rng.next();
  std::vector<Basket> out;
  out.reserve(baskets.size());
  for (std::size_t k = 0; k < baskets.size(); ++k) {
    Rng stream = Rng::substream(base, k);
    out.push_back(proc.corrupt(baskets[k], stream));
  }
  return out;
}

/// Reconstruction probabilities y for every corrupted input.
inline std::vector<Vector> reconstruct_all(const DaeModel& model,
                                           std::span<const Basket> corrupted) {
  std::vector<Vector> ys;
  ys.reserve(corrupted.size());
  for (const auto& xt : corrupted) ys.push_back(forward(model.params, xt).y);
  return ys;
}

inline ConfusionMatrix confusion_from(std::span<const Basket> clean, std::span<const Vector> ys,
                                      double eta) {
  if (clean.size() != ys.size()) throw DimensionError("confusion: basket/output count mismatch");
  ConfusionMatrix cm;
  for (std::size_t k = 0; k < clean.size(); ++k) cm.add(clean[k], discretize(ys[k], eta));
  return cm;
}

/// Counts over all p positions of every basket; `repeats` independent corruption
/// passes are accumulated into one matrix.
inline ConfusionMatrix evaluate_baskets(const DaeModel& model, std::span<const Basket> baskets,
                                        double eta, Rng& rng, std::size_t repeats = 1) {
  if (baskets.empty()) throw ConfigError("evaluation needs at least one basket");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta outside [0,1]");
  const auto proc = corruption_for(model);
  ConfusionMatrix cm;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto corrupted = draw_corruptions(proc, baskets, rng);
    cm += confusion_from(baskets, reconstruct_all(model, corrupted), eta);
  }
  return cm;
}

struct RocPoint {
  double eta = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
};

/// `n` evenly spaced thresholds from 0 to 1 inclusive.
inline std::vector<double> eta_grid(std::size_t n = 101) {
  if (n < 2) throw ConfigError("eta grid needs at least two points");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

inline void check_etas(std::span<const double> etas) {
  if (etas.empty()) throw ConfigError("threshold grid is empty");
  for (double e : etas)
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("eta " + to_shortest(e) + " outside [0,1]");
}

/// ROC from precomputed outputs; all thresholds see the same corruption.
inline RocCurve roc_from(std::span<const Basket> clean, std::span<const Vector> ys,
                         std::span<const double> etas) {
  check_etas(etas);
  std::vector<double> sorted(etas.begin(), etas.end());
  std::sort(sorted.begin(), sorted.end());
  RocCurve curve;
  curve.points.reserve(sorted.size());
  for (double eta : sorted) {
    const auto r = rates(confusion_from(clean, ys, eta));
    curve.points.push_back({eta, r.fpr, r.tpr});
  }
  return curve;
}

inline RocCurve roc(const DaeModel& model, std::span<const Basket> baskets,
                    std::span<const double> etas, Rng& rng) {
  check_etas(etas);
  if (baskets.empty()) throw ConfigError("ROC needs at least one basket");
  const auto corrupted = draw_corruptions(corruption_for(model), baskets, rng);
  return roc_from(baskets, reconstruct_all(model, corrupted), etas);
}

// ---------------------------------------------------------------------------
// Reports

inline void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "eta,fpr,tpr\n";
  for (const auto& pt : curve.points)
    out << to_shortest(pt.eta) << ',' << to_shortest(pt.fpr) << ',' << to_shortest(pt.tpr) << '\n';
}

inline void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "observed,predicted_missing,predicted_present,total\n";
  out << "missing," << cm.tp << ',' << cm.fn << ',' << cm.observed_missing() << '\n';
  out << "present," << cm.fp << ',' << cm.tn << ',' << cm.observed_present() << '\n';
  out << "total," << cm.predicted_missing() << ',' << cm.predicted_present() << ',' << cm.total()
      << '\n';
}

namespace detail {

inline std::string thousands(std::uint64_t v) {
  auto s = std::to_string(v);
  for (auto pos = static_cast<std::ptrdiff_t>(s.size()) - 3; pos > 0; pos -= 3)
    s.insert(static_cast<std::size_t>(pos), ",");
  return s;
}

}  // namespace detail

/// Plain-text table: rows observed missing/present, columns predicted missing/present.
inline std::string format_confusion_table(const ConfusionMatrix& cm) {
  using detail::thousands;
  std::ostringstream o;
  auto row = [&](const std::string& label, std::uint64_t a, std::uint64_t b, std::uint64_t t) {
    o << std::left << std::setw(18) << label << std::right << std::setw(19) << thousands(a)
      << std::setw(19) << thousands(b) << std::setw(10) << thousands(t) << '\n';
  };
  o << std::left << std::setw(18) << "" << std::right << std::setw(19) << "Predicted Missing"
    << std::setw(19) << "Predicted Present" << std::setw(10) << "Total" << '\n';
  o << std::string(66, '-') << '\n';
  row("Observed Missing", cm.tp, cm.fn, cm.observed_missing());
  row("Observed Present", cm.fp, cm.tn, cm.observed_present());
  o << std::string(66, '-') << '\n';
  row("Total", cm.predicted_missing(), cm.predicted_present(), cm.total());
  return o.str();
}

}  // namespace basket_dae
