#pragma once

// `basket-dae` command line: synth, train, eval, recommend, generate,
// sweep-hidden and sweep-eta. Exit codes: 0 success, 1 runtime failure,
// 2 usage or configuration error.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "basket_dae/data.hpp"
#include "basket_dae/errors.hpp"
#include "basket_dae/evaluation.hpp"
#include "basket_dae/format.hpp"
#include "basket_dae/generation.hpp"
#include "basket_dae/model.hpp"
#include "basket_dae/training.hpp"

namespace basket_dae::cli {

inline constexpr std::uint64_t default_seed = 42;
inline constexpr double default_train_fraction = 0.7001;

enum ExitCode : int { ok = 0, runtime_failure = 1, usage_error = 2 };

struct Recommendation {
  std::string label;
  double score = 0.0;
};

/// Items absent from `observed`, by descending reconstruction probability;
/// ties keep catalog order. At most `top_k` entries.
inline std::vector<Recommendation> recommend(const DaeModel& model,
                                             const std::vector<std::string>& observed,
                                             std::size_t top_k) {
  Basket x(model.p());
  for (const auto& label : observed) {
    auto idx = model.catalog.find(label);
    if (!idx) {
      std::string valid;
      for (const auto& n : model.catalog.names()) valid += (valid.empty() ? "" : ", ") + n;
      throw ConfigError("unknown item label '" + label + "'; valid labels: " + valid);
    }
    x.set(*idx, true);
  }
  if (x.is_empty()) throw ConfigError("recommendations need at least one observed item");

  const Vector y = forward(model.params, x).y;
  std::vector<Recommendation> out;
  for (std::size_t i = 0; i < model.p(); ++i)
    if (!x[i]) out.push_back({model.catalog.name(i), y(static_cast<Eigen::Index>(i))});
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  if (out.size() > top_k) out.resize(top_k);
  return out;
}

namespace detail {

inline void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::is_regular_file(path))
    throw ConfigError(std::string(what) + " file not found: " + path);
}

inline Dataset read_dataset(const std::string& path, const ItemCatalog* catalog = nullptr) {
  require_file(path, "data");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open data file: " + path);
  return catalog ? parse_transactions(in, CatalogMode::fixed, catalog)
                 : parse_transactions(in, CatalogMode::discover);
}

inline DaeModel read_model(const std::string& path) {
  require_file(path, "model");
  return load_model(path);
}

template <typename Fn>
void write_file(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  fn(out);
  if (!out) throw Error("failed writing '" + path + "'");
}

struct TrainFlags {
  TrainConfig cfg;
  bool walkback = false;
  double train_fraction = default_train_fraction;

  void attach(CLI::App& app) {
    app.add_option("--hidden", cfg.n_hidden, "Hidden layer size N")->capture_default_str();
    app.add_option("--batch", cfg.batch_size, "Minibatch size")->capture_default_str();
    app.add_option("--rounds", cfg.rounds, "Number of minibatch steps")->capture_default_str();
    app.add_option("--lr", cfg.adam.lr, "Adam learning rate")->capture_default_str();
    app.add_option("--beta1", cfg.adam.beta1, "Adam first-moment decay")->capture_default_str();
    app.add_option("--beta2", cfg.adam.beta2, "Adam second-moment decay")->capture_default_str();
    app.add_option("--epsilon", cfg.adam.epsilon, "Adam epsilon")->capture_default_str();
    app.add_option("--clip-delta", cfg.clip.delta0, "Initial gradient-norm clip threshold")
        ->capture_default_str();
    app.add_option("--clip-decay", cfg.clip.decay, "Clip decay: delta(t) = delta / (1 + decay*t)")
        ->capture_default_str();
    app.add_option("--eta", cfg.eta, "Threshold stored in the model")->capture_default_str();
    app.add_flag("--walkback", walkback, "Enable walkback augmentation");
    app.add_option("--walkback-k", cfg.walkback.k, "Walkback chain steps")->capture_default_str();
    app.add_option("--walkback-frac", cfg.walkback.fraction, "Share of each batch using walkback")
        ->capture_default_str();
    app.add_option("--eval-every", cfg.eval_every, "Checkpoint cadence in steps")
        ->capture_default_str();
    app.add_option("--train-fraction", train_fraction, "Share of baskets used for training")
        ->capture_default_str();
  }

  TrainConfig resolved(std::uint64_t seed) const {
    TrainConfig c = cfg;
    c.seed = seed;
    c.walkback.enabled = walkback;
    return c;
  }
};

/// Rewrites argv (minus the program name) so that `--config FILE` becomes the
/// file's `--key=value` pairs inserted directly after the subcommand name.
/// Returned in CLI11's reversed order.
inline std::vector<std::string> expand_config(int argc, const char* const* argv) {
  std::vector<std::string> in(argv + 1, argv + argc), rest;
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == "--config") {
      if (i + 1 >= in.size()) throw ConfigError("--config requires a file path");
      config_path = in[++i];
    } else if (in[i].rfind("--config=", 0) == 0) {
      config_path = in[i].substr(9);
    } else {
      rest.push_back(in[i]);
    }
  }
  std::vector<std::string> expanded;
  if (config_path) {
    require_file(*config_path, "config");
    std::ifstream cfg(*config_path);
    std::string line;
    while (std::getline(cfg, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const auto body = basket_dae::detail::trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError("config line without '=': " + std::string(body));
      auto key = std::string(basket_dae::detail::trim(body.substr(0, eq)));
      const auto value = std::string(basket_dae::detail::trim(body.substr(eq + 1)));
      if (key.rfind("--", 0) == 0) key = key.substr(2);
      expanded.push_back("--" + key + "=" + value);
    }
  }
  const auto sub = std::find_if(rest.begin(), rest.end(),
                                [](const std::string& a) { return a.empty() || a[0] != '-'; });
  const auto pos = sub == rest.end() ? rest.end() : sub + 1;
  rest.insert(pos, expanded.begin(), expanded.end());
  std::reverse(rest.begin(), rest.end());
  return rest;
}

}  // namespace detail

/// Parses `argv` and runs the selected subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Denoising auto-encoder recommender and basket generator", "basket-dae"};
  app.require_subcommand(1);
  app.footer("Any subcommand also accepts --config FILE: flat `key = value` lines using the\n"
             "long flag names; flags given on the command line take precedence.");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::uint64_t seed = default_seed;
  std::string data_path, model_path, out_path, report_path, basket_arg, init_mode = "dataset";
  std::size_t n = 0, top_k = std::numeric_limits<std::size_t>::max(), repeats = 1;
  std::optional<double> eta_override;
  std::vector<std::size_t> hidden_list;
  std::vector<double> eta_list;
  bool no_update = false;
  GenConfig gen;
  detail::TrainFlags train_flags;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed")->capture_default_str();
  };

  auto* synth = app.add_subcommand("synth", "Write a planted-structure synthetic transaction file");
  synth->add_option("--out", out_path, "Output transaction file")->required();
  n = 9835;
  synth->add_option("--n", n, "Number of baskets")->capture_default_str();
  add_seed(synth);

  auto* train_cmd = app.add_subcommand("train", "Split data, train a model, write model and log");
  train_cmd->add_option("--data", data_path, "Transaction file")->required();
  train_cmd->add_option("--model", model_path, "Output model file")->required();
  train_cmd->add_option("--out", out_path, "Training log CSV (default: <model>.log.csv)");
  add_seed(train_cmd);
  train_flags.attach(*train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Confusion matrix, rates and ROC on a data file");
  eval_cmd->add_option("--model", model_path, "Model file")->required();
  eval_cmd->add_option("--data", data_path, "Transaction file")->required();
  eval_cmd->add_option("--eta", eta_override, "Threshold (default: the model's)");
  eval_cmd->add_option("--repeats", repeats, "Corruption passes to accumulate")->capture_default_str();
  eval_cmd->add_option("--out", out_path, "Report prefix")->required();
  add_seed(eval_cmd);

  auto* rec_cmd = app.add_subcommand("recommend", "Rank items missing from a basket");
  rec_cmd->add_option("--model", model_path, "Model file")->required();
  rec_cmd->add_option("--basket", basket_arg, "Comma-separated observed labels")->required();
  rec_cmd->add_option("--top-k", top_k, "Maximum number of recommendations");

  auto* gen_cmd = app.add_subcommand("generate", "Sample synthetic baskets from the model chain");
  gen_cmd->add_option("--model", model_path, "Model file")->required();
  gen_cmd->add_option("--data", data_path, "Initialization / comparison transaction file")->required();
  gen_cmd->add_option("--n", gen.n_samples, "Baskets to emit")->capture_default_str();
  gen_cmd->add_option("--burn-in", gen.burn_in, "Steps before the first emission")->capture_default_str();
  gen_cmd->add_option("--thinning", gen.thinning, "Steps between emissions")->capture_default_str();
  gen_cmd->add_option("--chains", gen.chains, "Independent chains")->capture_default_str();
  gen_cmd->add_option("--init", init_mode, "Initialization: dataset or product")
      ->check(CLI::IsMember({"dataset", "product"}))
      ->capture_default_str();
  gen_cmd->add_option("--out", out_path, "Generated transaction file")->required();
  gen_cmd->add_option("--report", report_path, "Frequency CSV (default: <out>.freq.csv)");
  add_seed(gen_cmd);

  auto* sh_cmd = app.add_subcommand("sweep-hidden", "Miss-classification rate per hidden size");
  sh_cmd->add_option("--data", data_path, "Transaction file")->required();
  sh_cmd->add_option("--candidates", hidden_list, "Hidden sizes to try")->delimiter(',')->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sh_cmd->add_option("--out", out_path, "Result CSV");
  add_seed(sh_cmd);
  train_flags.attach(*sh_cmd);

  auto* se_cmd = app.add_subcommand("sweep-eta", "Tune the threshold and store it in the model");
  se_cmd->add_option("--model", model_path, "Model file (updated in place)")->required();
  se_cmd->add_option("--data", data_path, "Transaction file")->required();
  se_cmd->add_option("--eta", eta_list, "Thresholds (default: 101-point grid)")->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  se_cmd->add_option("--out", out_path, "Result CSV");
  se_cmd->add_flag("--no-update", no_update, "Do not write the best threshold into the model");
  add_seed(se_cmd);

  std::vector<std::string> args;
  try {
    args = detail::expand_config(argc, argv);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  }

  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  }

  try {
    if (*synth) {
      auto ds = synth_dataset(desk_scale_spec(), n, seed);
      detail::write_file(out_path, [&](std::ostream& o) { write_transactions(o, ds); });
      out << "seed " << seed << "\nwrote " << ds.size() << " baskets to " << out_path << '\n';
    } else if (*train_cmd) {
      const auto cfg = train_flags.resolved(seed);
      cfg.validate();
      const auto ds = detail::read_dataset(data_path);
      const auto [train_ds, eval_ds] = split(ds, train_flags.train_fraction, seed);
      const auto result = train(train_ds, eval_ds, cfg);
      save_model(result.model, model_path);
      const auto log_path = out_path.empty() ? model_path + ".log.csv" : out_path;
      detail::write_file(log_path, [&](std::ostream& o) { write_train_log_csv(o, result.log); });
      const auto& last = result.log.records.back();
      out << "seed " << seed << "\n"
          << "train/eval baskets " << train_ds.size() << '/' << eval_ds.size() << "\n"
          << "final eval loss " << to_decimal(last.eval_loss, 6) << "\n"
          << "final miss-classification rate " << to_decimal(last.misclass_rate, 6) << "\n"
          << "model " << model_path << "\nlog " << log_path << '\n';
    } else if (*eval_cmd) {
      const auto model = detail::read_model(model_path);
      const auto ds = detail::read_dataset(data_path, &model.catalog);
      const double eta = eta_override.value_or(model.eta);
      if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta outside [0,1]");
      if (repeats < 1) throw ConfigError("repeats must be at least 1");
      const auto baskets = nonempty_baskets(ds);
      if (baskets.empty()) throw ConfigError("data file has no nonempty baskets");
      Rng rng(seed);
      const auto cm = evaluate_baskets(model, baskets, eta, rng, repeats);
      const auto grid = eta_grid(101);
      Rng roc_rng(mix64(seed));
      const auto curve = roc(model, baskets, grid, roc_rng);
      const auto r = rates(cm);
      const double mcr = misclassification_rate(cm);
      detail::write_file(out_path + ".confusion.csv", [&](std::ostream& o) { write_confusion_csv(o, cm); });
      detail::write_file(out_path + ".confusion.txt",
                         [&](std::ostream& o) { o << format_confusion_table(cm); });
      detail::write_file(out_path + ".rates.csv", [&](std::ostream& o) {
        o << "eta,fpr,tpr,misclass_rate\n"
          << to_shortest(eta) << ',' << to_shortest(r.fpr) << ',' << to_shortest(r.tpr) << ','
          << to_shortest(mcr) << '\n';
      });
      detail::write_file(out_path + ".roc.csv", [&](std::ostream& o) { write_roc_csv(o, curve); });
      out << "seed " << seed << "\n"
          << format_confusion_table(cm) << "eta " << to_shortest(eta) << "  FPR "
          << to_decimal(r.fpr, 4) << "  TPR " << to_decimal(r.tpr, 4)
          << "  miss-classification " << to_decimal(mcr, 4) << '\n';
    } else if (*rec_cmd) {
      const auto model = detail::read_model(model_path);
      std::vector<std::string> labels;
      for (const auto& l : basket_dae::detail::split_labels(basket_arg)) labels.push_back(l);
      const auto recs = recommend(model, labels, top_k);
      out << "label,score\n";
      for (const auto& rec : recs) out << rec.label << ',' << to_decimal(rec.score, 6) << '\n';
    } else if (*gen_cmd) {
      gen.seed = seed;
      gen.init = init_mode == "product" ? InitMode::product : InitMode::dataset;
      gen.validate();
      const auto model = detail::read_model(model_path);
      const auto ds = detail::read_dataset(data_path, &model.catalog);
      const auto generated = generate(model, ds, gen);
      const auto report = frequency_report(generated, ds);
      const auto rpath = report_path.empty() ? out_path + ".freq.csv" : report_path;
      detail::write_file(out_path, [&](std::ostream& o) { write_transactions(o, generated); });
      detail::write_file(rpath, [&](std::ostream& o) { write_frequency_csv(o, report); });
      double worst = 0.0;
      for (const auto& row : report) worst = std::max(worst, row.abs_diff);
      out << "seed " << seed << "\nwrote " << generated.size() << " baskets to " << out_path
          << "\nmax item-frequency difference " << to_decimal(worst, 4) << "\nreport " << rpath
          << '\n';
    } else if (*sh_cmd) {
      const auto cfg = train_flags.resolved(seed);
      cfg.validate();
      const auto ds = detail::read_dataset(data_path);
      const auto [train_ds, eval_ds] = split(ds, train_flags.train_fraction, seed);
      const auto rows = sweep_hidden(train_ds, eval_ds, hidden_list, cfg);
      std::ostringstream csv;
      write_hidden_sweep_csv(csv, rows);
      if (!out_path.empty()) detail::write_file(out_path, [&](std::ostream& o) { o << csv.str(); });
      out << "seed " << seed << '\n' << csv.str();
    } else if (*se_cmd) {
      auto model = detail::read_model(model_path);
      const auto ds = detail::read_dataset(data_path, &model.catalog);
      const auto baskets = nonempty_baskets(ds);
      const auto etas = eta_list.empty() ? eta_grid(101) : eta_list;
      Rng rng(seed);
      const auto sweep = sweep_threshold(model, baskets, etas, rng);
      std::ostringstream csv;
      write_threshold_sweep_csv(csv, sweep);
      if (!out_path.empty()) detail::write_file(out_path, [&](std::ostream& o) { o << csv.str(); });
      out << "seed " << seed << '\n' << csv.str() << "best eta " << to_shortest(sweep.best_eta)
          << " miss-classification " << to_decimal(sweep.best_rate, 6) << '\n';
      if (!no_update) {
        model.eta = sweep.best_eta;
        save_model(model, model_path);
        out << "updated " << model_path << '\n';
      }
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return runtime_failure;
  }
  return ok;
}

}  // namespace basket_dae::cli
