#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "basket_dae/errors.hpp"
#include "basket_dae/network.hpp"

namespace basket_dae {

/// Clip threshold delta(t) = delta0 / (1 + decay * t). decay == 0 keeps it constant.
struct ClipSchedule {
  double delta0 = 1.0;
  double decay = 0.0;

  void validate() const {
    if (!(delta0 > 0.0) || !std::isfinite(delta0))
      throw ConfigError("clip delta must be positive and finite");
    if (!(decay >= 0.0) || !std::isfinite(decay))
      throw ConfigError("clip decay must be nonnegative and finite");
  }

  double at(std::uint64_t step) const {
    return delta0 / (1.0 + decay * static_cast<double>(step));
  }
};

inline double global_norm(const ParameterBlocks& g) { return std::sqrt(g.squared_norm()); }

/// Rescales `grads` so the joint euclidean norm over all blocks is at most delta.
inline DaeGradients clip(DaeGradients grads, double delta) {
  if (!(delta > 0.0)) throw ConfigError("clip threshold must be positive");
  const double norm = global_norm(grads);
  if (norm <= delta) return grads;
  grads.for_each_block([&](auto& blk) { blk = (blk * delta) / norm; });
  return grads;
}

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0,1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  }
};

struct AdamState {
  AdamConfig config;
  ParameterBlocks m;
  ParameterBlocks v;
  std::uint64_t t = 0;

  static AdamState fresh(const AdamConfig& config, const ParameterBlocks& shape) {
    config.validate();
    AdamState s;
    s.config = config;
    s.m.resize_zero(shape.p(), shape.n_hidden());
    s.v.resize_zero(shape.p(), shape.n_hidden());
    return s;
  }

  friend bool operator==(const AdamState& a, const AdamState& b) {
    return a.t == b.t && a.m == b.m && a.v == b.v && a.config.lr == b.config.lr &&
           a.config.beta1 == b.config.beta1 && a.config.beta2 == b.config.beta2 &&
           a.config.epsilon == b.config.epsilon;
  }
};

/// One bias-corrected Adam update of `params` in place. `grads` must already be clipped.
inline void adam_step(AdamState& state, DaeParams& params, const DaeGradients& grads) {
  if (!params.same_shape(grads) || !state.m.same_shape(params) || !state.v.same_shape(params))
    throw DimensionError("adam_step: parameter, gradient and moment shapes differ");
  if (!grads.all_finite())
    throw NumericError("non-finite gradient at step " + std::to_string(state.t + 1), state.t + 1);

  const auto& c = state.config;
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    param.array() -= c.lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + c.epsilon);
  };
  update(params.w_in, state.m.w_in, state.v.w_in, grads.w_in);
  update(params.b_in, state.m.b_in, state.v.b_in, grads.b_in);
  update(params.w_out, state.m.w_out, state.v.w_out, grads.w_out);
  update(params.b_out, state.m.b_out, state.v.b_out, grads.b_out);
}

// Persistence of optimizer state (for resuming) as JSON. Doubles go through
// nlohmann's shortest round-trip formatting, so values come back bit-exact.

namespace detail {

inline nlohmann::json blocks_to_json(const ParameterBlocks& b) {
  auto flat = [](const auto& blk) {
    return std::vector<double>(blk.data(), blk.data() + blk.size());
  };
  return {{"p", b.p()},
          {"n_hidden", b.n_hidden()},
          {"w_in", flat(b.w_in)},
          {"b_in", flat(b.b_in)},
          {"w_out", flat(b.w_out)},
          {"b_out", flat(b.b_out)}};
}

inline ParameterBlocks blocks_from_json(const nlohmann::json& j) {
  ParameterBlocks b;
  b.resize_zero(j.at("p").get<std::size_t>(), j.at("n_hidden").get<std::size_t>());
  auto fill = [&](auto& blk, const char* key) {
    const auto vals = j.at(key).get<std::vector<double>>();
    if (vals.size() != static_cast<std::size_t>(blk.size()))
      throw DimensionError(std::string("optimizer state: dimension mismatch in ") + key);
    std::copy(vals.begin(), vals.end(), blk.data());
  };
  fill(b.w_in, "w_in");
  fill(b.b_in, "b_in");
  fill(b.w_out, "w_out");
  fill(b.b_out, "b_out");
  return b;
}

}  // namespace detail

inline nlohmann::json to_json(const AdamState& s) {
  return {{"t", s.t},
          {"lr", s.config.lr},
          {"beta1", s.config.beta1},
          {"beta2", s.config.beta2},
          {"epsilon", s.config.epsilon},
          {"m", detail::blocks_to_json(s.m)},
          {"v", detail::blocks_to_json(s.v)}};
}

inline AdamState adam_state_from_json(const nlohmann::json& j) {
  AdamState s;
  s.t = j.at("t").get<std::uint64_t>();
  s.config.lr = j.at("lr").get<double>();
  s.config.beta1 = j.at("beta1").get<double>();
  s.config.beta2 = j.at("beta2").get<double>();
  s.config.epsilon = j.at("epsilon").get<double>();
  s.m = detail::blocks_from_json(j.at("m"));
  s.v = detail::blocks_from_json(j.at("v"));
  return s;
}

}  // namespace basket_dae
