// lyapnet command line: plan / check / train / attack / verify-bound / spectral.
// Thin front end over the shared library's C API; owns flag parsing, config
// overrides and artifact paths, nothing numerical.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lyapnet/lyapnet.h"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct StringGuard {
  char* s = nullptr;
  ~StringGuard() { lyap_string_free(s); }
  std::string str() const { return s != nullptr ? std::string(s) : std::string(); }
};

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<double> eps;
  std::optional<std::string> attack;
  std::optional<std::size_t> k;
  bool strict_cert = false;
  std::optional<std::string> semantics;
};

int fail(lyap_status st, const std::string& context) {
  std::cerr << "error (" << lyap_status_name(st) << "): " << context << ": " << lyap_last_error()
            << "\n";
  return 1;
}

ordered_json load_config(const CommonOpts& opts) {
  if (opts.config_path.empty()) throw CLI::ValidationError("--config", "config file required");
  std::ifstream f(opts.config_path);
  if (!f) {
    std::cerr << "error: cannot open config " << opts.config_path << "\n";
    std::exit(1);
  }
  std::stringstream ss;
  ss << f.rdbuf();
  ordered_json j;
  try {
    j = ordered_json::parse(ss.str());
  } catch (const std::exception& e) {
    std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
    std::exit(1);
  }
  return j;
}

void apply_overrides(ordered_json& cfg, const CommonOpts& opts) {
  if (opts.seed) cfg["seed"] = *opts.seed;
  if (!opts.eps.empty()) cfg["attack_sweep"]["eps"] = opts.eps;
  if (opts.attack) cfg["attack_sweep"]["kinds"] = std::vector<std::string>{*opts.attack};
  if (opts.k) cfg["attack_sweep"]["k"] = *opts.k;
  if (opts.strict_cert) cfg["strict_cert"] = true;
  if (opts.semantics) cfg["semantics"] = *opts.semantics;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) {
    std::cerr << "error: cannot write " << path.string() << "\n";
    std::exit(1);
  }
  std::cout << "wrote " << path.string() << "\n";
}

fs::path out_path(const CommonOpts& opts, const std::string& name) {
  return fs::path(opts.out_dir.empty() ? "." : opts.out_dir) / name;
}

void print_bounds_table(const ordered_json& cert, const std::vector<double>& eps_list,
                        double gdelta, double gnu) {
  if (eps_list.empty()) return;
  std::cout << "\nbounds (global delta=" << gdelta << ", nu=" << gnu << "):\n";
  std::cout << "  eps    corollary sqrt(c)*eps    table sqrt(c*eps)\n";
  for (double e : eps_list) {
    double cb = 0.0, tb = 0.0;
    if (lyap_corollary_bound(gdelta, gnu, e, &cb) != LYAP_OK ||
        lyap_table_bound(gdelta, gnu, e, &tb) != LYAP_OK) {
      std::cerr << "  eps=" << e << ": " << lyap_last_error() << "\n";
      continue;
    }
    std::cout << "  " << e << "    " << cb << "    " << tb << "\n";
  }
  (void)cert;
}

int cmd_plan(const CommonOpts& opts) {
  const ordered_json cfg = load_config(opts);
  if (!cfg.contains("budgets") || cfg["budgets"].is_null()) {
    std::cerr << "error: config has no budgets section\n";
    return 1;
  }
  const auto& b = cfg["budgets"];
  const double gd = b.at("global").at("delta");
  const double gn = b.at("global").at("nu");
  std::size_t layers = 0;
  if (b.contains("n_layers")) {
    layers = b["n_layers"].get<std::size_t>();
  } else if (cfg.contains("model")) {
    // Count parameterized layers (dense/conv, descending into residual branches).
    std::function<std::size_t(const ordered_json&)> count = [&](const ordered_json& ls) {
      std::size_t c = 0;
      for (const auto& l : ls) {
        const std::string kind = l.at("kind");
        if (kind == "dense" || kind == "conv")
          ++c;
        else if (kind == "residual")
          c += count(l.at("branch"));
      }
      return c;
    };
    layers = count(cfg["model"]["layers"]);
  }
  if (layers == 0) {
    std::cerr << "error: cannot determine layer count (budgets.n_layers or model.layers)\n";
    return 1;
  }
  StringGuard out;
  const lyap_status st =
      lyap_plan(layers, gd, gn, b.value("margin_out", 0.0), b.value("margin_in", 0.0),
                b.value("slack", 0.0), &out.s);
  if (st != LYAP_OK) return fail(st, "plan");
  std::cout << out.s << "\n";
  write_file(out_path(opts, "plan.json"), out.str());
  return 0;
}

int cmd_check(const CommonOpts& opts) {
  ordered_json cfg = load_config(opts);
  apply_overrides(cfg, opts);
  if (!cfg.contains("budgets") || cfg["budgets"].is_null() ||
      !cfg["budgets"].contains("layers") || cfg["budgets"]["layers"].empty()) {
    std::cerr << "error: check needs budgets.layers and budgets.global in the config\n";
    return 1;
  }
  std::vector<double> deltas, nus;
  for (const auto& lb : cfg["budgets"]["layers"]) {
    deltas.push_back(lb.at("delta"));
    nus.push_back(lb.at("nu"));
  }
  const double gd = cfg["budgets"].at("global").at("delta");
  const double gn = cfg["budgets"].at("global").at("nu");
  StringGuard out;
  const lyap_status st = lyap_certify(deltas.data(), nus.data(), deltas.size(), gd, gn,
                                      opts.strict_cert ? 1 : 0, &out.s);
  if (st != LYAP_OK) return fail(st, "check");
  std::cout << out.s << "\n";
  std::vector<double> eps = opts.eps;
  if (eps.empty() && cfg.contains("attack_sweep") && cfg["attack_sweep"].contains("eps"))
    eps = cfg["attack_sweep"]["eps"].get<std::vector<double>>();
  print_bounds_table(ordered_json::parse(out.str()), eps, gd, gn);
  write_file(out_path(opts, "certificate.json"), out.str());
  const ordered_json parsed = ordered_json::parse(out.str());
  return parsed.at("status") == "pass" ? 0 : 1;
}

int cmd_train(const CommonOpts& opts) {
  ordered_json cfg = load_config(opts);
  apply_overrides(cfg, opts);
  lyap_model* model = nullptr;
  StringGuard log;
  const lyap_status st = lyap_train(cfg.dump().c_str(), nullptr, &model, &log.s);
  if (st != LYAP_OK) return fail(st, "train");
  std::unique_ptr<lyap_model, decltype(&lyap_model_free)> guard(model, lyap_model_free);
  const fs::path ckpt = out_path(opts, "model.lyap");
  fs::create_directories(ckpt.parent_path());
  const lyap_status st2 = lyap_model_save(model, ckpt.string().c_str());
  if (st2 != LYAP_OK) return fail(st2, "save checkpoint");
  std::cout << "wrote " << ckpt.string() << "\n";
  write_file(out_path(opts, "train_log.json"), log.str());
  write_file(out_path(opts, "config.resolved.json"), cfg.dump(2) + "\n");
  return 0;
}

int evaluate_checkpoint(const CommonOpts& opts, const std::string& ckpt_path,
                        const std::string& report_name, const std::string& csv_name,
                        bool print_bound_lines) {
  ordered_json cfg = load_config(opts);
  apply_overrides(cfg, opts);
  lyap_model* model = nullptr;
  lyap_status st = lyap_model_load(ckpt_path.c_str(), &model);
  if (st != LYAP_OK) return fail(st, "load checkpoint");
  std::unique_ptr<lyap_model, decltype(&lyap_model_free)> guard(model, lyap_model_free);
  StringGuard report, csv;
  st = lyap_evaluate(cfg.dump().c_str(), model, nullptr, &report.s, &csv.s);
  if (st != LYAP_OK) return fail(st, "evaluate");
  const ordered_json rep = ordered_json::parse(report.str());
  std::cout << "clean_accuracy: " << rep.at("clean_accuracy") << "\n";
  std::cout << csv.s;
  bool all_ok = true;
  if (print_bound_lines) {
    for (const auto& row : rep.at("sweep")) {
      const bool ok = row.at("bound_satisfied").get<bool>();
      all_ok = all_ok && ok;
      std::cout << row.at("attack").get<std::string>() << " eps=" << row.at("eps")
                << ": mean |Delta_n| = " << row.at("mean_deviation")
                << (ok ? " <= " : " > ") << row.at("table_bound").get<double>()
                << " [" << (ok ? "bound holds" : "BOUND VIOLATED") << "]\n";
    }
  }
  write_file(out_path(opts, report_name), report.str());
  write_file(out_path(opts, csv_name), csv.str());
  return 0;
}

int cmd_spectral(const CommonOpts& opts, const std::string& ckpt_path, std::size_t iters) {
  lyap_model* model = nullptr;
  lyap_status st = lyap_model_load(ckpt_path.c_str(), &model);
  if (st != LYAP_OK) return fail(st, "load checkpoint");
  std::unique_ptr<lyap_model, decltype(&lyap_model_free)> guard(model, lyap_model_free);
  StringGuard out;
  st = lyap_model_spectra(model, static_cast<std::uint32_t>(iters), 1, &out.s);
  if (st != LYAP_OK) return fail(st, "spectral");
  std::cout << out.s;
  if (!opts.out_dir.empty()) write_file(out_path(opts, "spectral.json"), out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov-budgeted spectral training, certification and attack verification"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string ckpt;
  std::size_t spectral_iters = 100;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opts.config_path, "experiment config (JSON)");
    if (needs_config) c->required();
    sub->add_option("--seed", [&opts](const std::vector<std::string>& v) {
      opts.seed = std::stoull(v.at(0));
      return true;
    }, "override config seed");
    sub->add_option("--out", opts.out_dir, "output directory for artifacts");
    sub->add_option("--eps", [&opts](const std::vector<std::string>& v) {
      opts.eps.clear();
      std::stringstream ss(v.at(0));
      std::string tok;
      while (std::getline(ss, tok, ',')) opts.eps.push_back(std::stod(tok));
      return true;
    }, "attack radii, comma separated (e.g. 0.1,0.2,0.3)");
    sub->add_option("--attack", [&opts](const std::vector<std::string>& v) {
      if (v.at(0) != "fgm" && v.at(0) != "pgd") throw CLI::ValidationError("--attack", "fgm|pgd");
      opts.attack = v.at(0);
      return true;
    }, "attack kind: fgm|pgd");
    sub->add_option("--k", [&opts](const std::vector<std::string>& v) {
      opts.k = std::stoull(v.at(0));
      return true;
    }, "PGD iteration count");
    sub->add_flag("--strict-cert", opts.strict_cert,
                  "certificate passes only if -A is quasi-dominant");
    sub->add_option("--semantics", [&opts](const std::vector<std::string>& v) {
      if (v.at(0) != "sigma" && v.at(0) != "sigma2")
        throw CLI::ValidationError("--semantics", "sigma|sigma2");
      opts.semantics = v.at(0);
      return true;
    }, "cap semantics: sigma|sigma2");
  };

  auto* plan = app.add_subcommand("plan", "plan per-layer budgets from a global budget");
  add_common(plan, true);
  auto* check = app.add_subcommand("check", "certificate report for explicit budgets");
  add_common(check, true);
  auto* train = app.add_subcommand("train", "train a model from a config");
  add_common(train, true);
  auto* attack = app.add_subcommand("attack", "robust-accuracy sweep on a checkpoint");
  add_common(attack, true);
  attack->add_option("checkpoint", ckpt, "model checkpoint path")->required();
  auto* verify = app.add_subcommand("verify-bound", "measured deviation vs bound per eps");
  add_common(verify, true);
  verify->add_option("checkpoint", ckpt, "model checkpoint path")->required();
  auto* spectral = app.add_subcommand("spectral", "per-layer sigma_max of a checkpoint");
  add_common(spectral, false);
  spectral->add_option("checkpoint", ckpt, "model checkpoint path")->required();
  spectral->add_option("--iters", spectral_iters, "power iterations (default 100)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (plan->parsed()) return cmd_plan(opts);
    if (check->parsed()) return cmd_check(opts);
    if (train->parsed()) return cmd_train(opts);
    if (attack->parsed()) return evaluate_checkpoint(opts, ckpt, "attack_report.json", "attack_sweep.csv", false);
    if (verify->parsed()) return evaluate_checkpoint(opts, ckpt, "verify_report.json", "verify_sweep.csv", true);
    if (spectral->parsed()) return cmd_spectral(opts, ckpt, spectral_iters);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
