#pragma once

// Trained model bundle and its on-disk document.
//
// The file is a JSON object written with a fixed key order and every double
// rendered with 17 significant digits, so save -> load -> save is byte-identical:
//
//   {
//     "format_version": 1,
//     "p": 10,
//     "n_hidden": 100,
//     "item_labels": ["a", "b", ...],
//     "eta": 0.5,
//     "supports": [...p values...],
//     "w_in": [[...p...], ...N rows...],
//     "b_in": [...N...],
//     "w_out": [[...N...], ...p rows...],
//     "b_out": [...p...]
//   }

#include <cstddef>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "basket_dae/corruption.hpp"
#include "basket_dae/data.hpp"
#include "basket_dae/errors.hpp"
#include "basket_dae/format.hpp"
#include "basket_dae/network.hpp"

namespace basket_dae {

inline constexpr int model_format_version = 1;

struct DaeModel {
  DaeParams params;
  ItemCatalog catalog;
  SupportProfile supports;
  double eta = 0.5;

  std::size_t p() const noexcept { return catalog.size(); }
  std::size_t n_hidden() const noexcept { return params.n_hidden(); }

  void validate() const {
    if (!params.consistent()) throw DimensionError("model: inconsistent parameter blocks");
    if (params.p() != catalog.size() || supports.size() != catalog.size())
      throw DimensionError("model: parameter, catalog and support sizes differ");
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("model: eta outside [0,1]");
  }

  friend bool operator==(const DaeModel& a, const DaeModel& b) {
    return a.params == b.params && a.catalog == b.catalog && a.supports.pi == b.supports.pi &&
           a.eta == b.eta;
  }
};

/// The corruption process the model was trained under.
inline CorruptionProcess corruption_for(const DaeModel& model) {
  return CorruptionProcess(model.supports);
}

namespace detail {

template <typename Seq>
void write_array(std::ostream& out, const Seq& values, std::size_t n) {
  out << '[';
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out << ',';
    out << to_decimal(values[i]);
  }
  out << ']';
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
  out << '[';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) out << ",\n    ";
    const Vector row = m.row(r).transpose();
    write_array(out, row, static_cast<std::size_t>(row.size()));
  }
  out << ']';
}

}  // namespace detail

inline void write_model(std::ostream& out, const DaeModel& model) {
  model.validate();
  out << "{\n";
  out << "  \"format_version\": " << model_format_version << ",\n";
  out << "  \"p\": " << model.p() << ",\n";
  out << "  \"n_hidden\": " << model.n_hidden() << ",\n";
  out << "  \"item_labels\": " << nlohmann::json(model.catalog.names()).dump() << ",\n";
  out << "  \"eta\": " << to_decimal(model.eta) << ",\n";
  out << "  \"supports\": ";
  detail::write_array(out, model.supports.pi, model.supports.size());
  out << ",\n  \"w_in\": ";
  detail::write_matrix(out, model.params.w_in);
  out << ",\n  \"b_in\": ";
  detail::write_array(out, model.params.b_in, model.n_hidden());
  out << ",\n  \"w_out\": ";
  detail::write_matrix(out, model.params.w_out);
  out << ",\n  \"b_out\": ";
  detail::write_array(out, model.params.b_out, model.p());
  out << "\n}\n";
}

inline std::string serialize_model(const DaeModel& model) {
  std::ostringstream out;
  write_model(out, model);
  return out.str();
}

inline DaeModel parse_model(const std::string& text) {
  using Kind = ModelLoadError::Kind;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelLoadError(Kind::malformed, std::string("model file is truncated or malformed: ") + e.what());
  }

  try {
    const auto version = j.at("format_version").get<int>();
    if (version != model_format_version)
      throw ModelLoadError(Kind::version_mismatch,
                           "unsupported model format_version " + std::to_string(version) +
                               " (expected " + std::to_string(model_format_version) + ")");

    const auto p = j.at("p").get<std::size_t>();
    const auto n = j.at("n_hidden").get<std::size_t>();
    if (p == 0 || n == 0) throw ModelLoadError(Kind::dimension_mismatch, "dimension mismatch: p and n_hidden must be positive");

    auto mismatch = [](const std::string& field) {
      return ModelLoadError(Kind::dimension_mismatch, "dimension mismatch in '" + field + "'");
    };
    auto vec = [&](const char* key, std::size_t len) {
      auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != len) throw mismatch(key);
      return v;
    };
    auto mat = [&](const char* key, std::size_t rows, std::size_t cols) {
      auto v = j.at(key).get<std::vector<std::vector<double>>>();
      if (v.size() != rows) throw mismatch(key);
      Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      for (std::size_t r = 0; r < rows; ++r) {
        if (v[r].size() != cols) throw mismatch(key);
        for (std::size_t c = 0; c < cols; ++c)
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c];
      }
      return m;
    };

    DaeModel model;
    auto labels = j.at("item_labels").get<std::vector<std::string>>();
    if (labels.size() != p) throw mismatch("item_labels");
    model.catalog = ItemCatalog(std::move(labels));
    model.eta = j.at("eta").get<double>();
    model.supports.pi = vec("supports", p);
    model.params.w_in = mat("w_in", n, p);
    const auto b_in = vec("b_in", n);
    model.params.b_in = Eigen::Map<const Vector>(b_in.data(), static_cast<Eigen::Index>(n));
    model.params.w_out = mat("w_out", p, n);
    const auto b_out = vec("b_out", p);
    model.params.b_out = Eigen::Map<const Vector>(b_out.data(), static_cast<Eigen::Index>(p));
    if (!model.params.all_finite())
      throw ModelLoadError(Kind::malformed, "model file contains non-finite parameters");
    if (!(model.eta >= 0.0 && model.eta <= 1.0))
      throw ModelLoadError(Kind::malformed, "model eta outside [0,1]");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ModelLoadError(Kind::malformed, std::string("model file is malformed: ") + e.what());
  } catch (const IngestError& e) {
    throw ModelLoadError(Kind::malformed, std::string("model file has a bad catalog: ") + e.what());
  }
}

inline void save_model(const DaeModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_model(out, model);
  if (!out) throw Error("failed writing model to '" + path + "'");
}

inline DaeModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace basket_dae
