#pragma once

// Transaction ingestion, item catalogs, empirical supports and the planted
// synthetic basket generator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "basket_dae/errors.hpp"
#include "basket_dae/format.hpp"
#include "basket_dae/random.hpp"

namespace basket_dae {

/// Binary item-presence vector over a catalog.
class Basket {
 public:
  Basket() = default;
  explicit Basket(std::size_t p) : bits_(p, 0) {}
  Basket(std::initializer_list<int> bits) {
    bits_.reserve(bits.size());
    for (int b : bits) bits_.push_back(b != 0 ? 1 : 0);
  }
  explicit Basket(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto& b : bits_) b = b != 0 ? 1 : 0;
  }

  std::size_t size() const noexcept { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool on) { bits_[i] = on ? 1 : 0; }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  bool is_empty() const noexcept { return count() == 0; }

  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  /// Encodes the bit pattern as an integer (bit i = item i); only for p <= 63.
  std::uint64_t code() const {
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i] != 0) c |= std::uint64_t{1} << i;
    return c;
  }
  static Basket from_code(std::uint64_t code, std::size_t p) {
    Basket b(p);
    for (std::size_t i = 0; i < p; ++i) b.set(i, ((code >> i) & 1U) != 0);
    return b;
  }

  friend bool operator==(const Basket&, const Basket&) = default;
  friend auto operator<=>(const Basket&, const Basket&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Ordered list of distinct item labels.
class ItemCatalog {
 public:
  ItemCatalog() = default;

  explicit ItemCatalog(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw IngestError("item catalog must contain at least one label");
    for (std::size_t i = 0; i < names_.size(); ++i) {
      const auto& n = names_[i];
      if (n.empty()) throw IngestError("item catalog: empty label");
      if (n.find_first_of(",\n\r") != std::string::npos)
        throw IngestError("item catalog: label '" + n + "' contains a separator");
      if (!index_.emplace(n, i).second)
        throw IngestError("item catalog: duplicate label '" + n + "'");
    }
  }

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }

  std::optional<std::size_t> find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const ItemCatalog& a, const ItemCatalog& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Dataset {
  ItemCatalog catalog;
  std::vector<Basket> baskets;

  std::size_t size() const noexcept { return baskets.size(); }
  bool empty() const noexcept { return baskets.empty(); }
  std::size_t p() const noexcept { return catalog.size(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Empirical item marginals.
struct SupportProfile {
  std::vector<double> pi;

  std::size_t size() const noexcept { return pi.size(); }
  double operator[](std::size_t i) const { return pi[i]; }
};

enum class CatalogMode { discover, fixed };

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_labels(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    auto end = line.find(',', start);
    if (end == std::string_view::npos) end = line.size();
    auto tok = trim(line.substr(start, end - start));
    if (!tok.empty()) out.emplace_back(tok);
    start = end + 1;
  }
  return out;
}

}  // namespace detail

/// Reads one basket per nonempty line of comma-separated labels.
///
/// In discover mode the catalog is the lexicographically sorted set of labels
/// seen. In fixed mode `catalog` must be supplied and every label must resolve.
inline Dataset parse_transactions(std::istream& in, CatalogMode mode,
                                  const ItemCatalog* catalog = nullptr) {
  if (mode == CatalogMode::fixed && catalog == nullptr)
    throw ConfigError("fixed-catalog parsing requires a catalog");

  std::vector<std::pair<std::size_t, std::vector<std::string>>> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto labels = detail::split_labels(line);
    if (!labels.empty()) lines.emplace_back(lineno, std::move(labels));
  }
  if (lines.empty()) throw IngestError("no transactions");

  Dataset ds;
  if (mode == CatalogMode::discover) {
    std::set<std::string> seen;
    for (const auto& [n, labels] : lines) seen.insert(labels.begin(), labels.end());
    ds.catalog = ItemCatalog(std::vector<std::string>(seen.begin(), seen.end()));
  } else {
    ds.catalog = *catalog;
  }

  ds.baskets.reserve(lines.size());
  for (const auto& [n, labels] : lines) {
    Basket b(ds.catalog.size());
    for (const auto& label : labels) {
      auto idx = ds.catalog.find(label);
      if (!idx)
        throw IngestError("line " + std::to_string(n) + ": unknown item label '" + label + "'");
      b.set(*idx, true);
    }
    ds.baskets.push_back(std::move(b));
  }
  return ds;
}

inline Dataset parse_transactions(std::string_view text, CatalogMode mode,
                                  const ItemCatalog* catalog = nullptr) {
  std::istringstream in{std::string(text)};
  return parse_transactions(in, mode, catalog);
}

/// Writes each basket as its present labels in catalog order. Empty baskets
/// produce empty lines, which the parser skips.
inline void write_transactions(std::ostream& out, const Dataset& ds) {
  for (const auto& b : ds.baskets) {
    bool first = true;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!b[i]) continue;
      if (!first) out << ',';
      out << ds.catalog.name(i);
      first = false;
    }
    out << '\n';
  }
}

inline std::string serialize_transactions(const Dataset& ds) {
  std::ostringstream out;
  write_transactions(out, ds);
  return out.str();
}

/// Seeded random partition; train receives floor(train_fraction * |ds|) baskets.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                         std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train fraction must lie in (0,1), got " + to_shortest(train_fraction));
  if (ds.empty()) throw ConfigError("cannot split an empty dataset");

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const auto n_train =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(ds.size())));
  Dataset train{ds.catalog, {}}, eval{ds.catalog, {}};
  train.baskets.reserve(n_train);
  eval.baskets.reserve(ds.size() - n_train);
  for (std::size_t k = 0; k < order.size(); ++k)
    (k < n_train ? train : eval).baskets.push_back(ds.baskets[order[k]]);
  return {std::move(train), std::move(eval)};
}

inline SupportProfile estimate_supports(const Dataset& train) {
  if (train.empty()) throw ConfigError("cannot estimate supports from an empty dataset");
  std::vector<double> counts(train.p(), 0.0);
  for (const auto& b : train.baskets) {
    if (b.size() != train.p()) throw DimensionError("basket length differs from catalog size");
    for (std::size_t i = 0; i < b.size(); ++i)
      if (b[i]) counts[i] += 1.0;
  }
  for (auto& c : counts) c /= static_cast<double>(train.size());
  return {std::move(counts)};
}

/// Per-item presence frequency; zero for an empty dataset.
inline std::vector<double> item_frequencies(const Dataset& ds) {
  if (ds.empty()) return std::vector<double>(ds.p(), 0.0);
  return estimate_supports(ds).pi;
}

/// CSV `label,support`.
inline void write_supports_csv(std::ostream& out, const ItemCatalog& catalog,
                               const SupportProfile& supports) {
  if (catalog.size() != supports.size())
    throw DimensionError("support profile length differs from catalog size");
  out << "label,support\n";
  for (std::size_t i = 0; i < catalog.size(); ++i)
    out << catalog.name(i) << ',' << to_shortest(supports[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Planted-structure synthetic data

/// Items that tend to be bought together. When a cluster fires (probability
/// `activation`), each member joins the basket with probability `inclusion`.
struct ItemCluster {
  std::vector<std::size_t> items;
  double activation = 0.0;
  double inclusion = 1.0;
};

/// Generative description of a synthetic basket population. Every item is also
/// included independently with its base marginal; all-zero draws are rejected.
struct PlantedSpec {
  std::size_t p = 0;
  std::vector<ItemCluster> clusters;
  std::vector<double> base;

  void validate() const {
    if (p == 0) throw ConfigError("planted spec: p must be positive");
    if (base.size() != p) throw ConfigError("planted spec: base marginals must have length p");
    bool any_mass = false;
    for (double b : base) {
      if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("planted spec: base marginal outside [0,1]");
      any_mass = any_mass || b > 0.0;
    }
    for (const auto& c : clusters) {
      if (c.items.empty()) throw ConfigError("planted spec: empty cluster");
      for (auto i : c.items)
        if (i >= p) throw ConfigError("planted spec: cluster item out of range");
      if (!(c.activation >= 0.0 && c.activation <= 1.0) ||
          !(c.inclusion >= 0.0 && c.inclusion <= 1.0))
        throw ConfigError("planted spec: cluster probability outside [0,1]");
      any_mass = any_mass || (c.activation > 0.0 && c.inclusion > 0.0);
    }
    if (!any_mass) throw ConfigError("planted spec: every basket would be empty");
  }
};

/// Zero-padded labels item01..itemNN so lexicographic order equals index order.
inline ItemCatalog numbered_catalog(std::size_t p) {
  const auto width = std::to_string(p).size() < 2 ? 2 : std::to_string(p).size();
  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t i = 1; i <= p; ++i) {
    auto digits = std::to_string(i);
    names.push_back("item" + std::string(width - digits.size(), '0') + digits);
  }
  return ItemCatalog(std::move(names));
}

/// Ten items: two three-item clusters (items 1-3 and 4-6) on top of sparse
/// independent noise, with four further independent items of varying popularity.
inline PlantedSpec desk_scale_spec() {
  PlantedSpec spec;
  spec.p = 10;
  spec.clusters = {{{0, 1, 2}, 0.40, 0.90}, {{3, 4, 5}, 0.35, 0.90}};
  spec.base = {0.03, 0.03, 0.03, 0.03, 0.03, 0.03, 0.25, 0.15, 0.10, 0.05};
  return spec;
}

inline Dataset synth_dataset(const PlantedSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw ConfigError("synthetic dataset size must be positive");

  constexpr std::size_t max_attempts = 100000;
  Rng rng(seed);
  Dataset ds{numbered_catalog(spec.p), {}};
  ds.baskets.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Basket b(spec.p);
    std::size_t attempts = 0;
    do {
      if (++attempts > max_attempts)
        throw ConfigError("planted spec: could not draw a nonempty basket");
      b = Basket(spec.p);
      for (const auto& c : spec.clusters) {
        if (!rng.bernoulli(c.activation)) continue;
        for (auto i : c.items)
          if (rng.bernoulli(c.inclusion)) b.set(i, true);
      }
      for (std::size_t i = 0; i < spec.p; ++i)
        if (rng.bernoulli(spec.base[i])) b.set(i, true);
    } while (b.is_empty());
    ds.baskets.push_back(std::move(b));
  }
  return ds;
}

}  // namespace basket_dae
