#include "harness/experiment.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cert/bounds.hpp"
#include "io/checkpoint.hpp"

namespace lyapnet {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json spec_to_json(const LayerSpec& s) {
  ordered_json j;
  switch (s.kind) {
    case LayerKind::Dense:
      j["kind"] = "dense";
      j["in"] = s.in;
      j["out"] = s.out;
      break;
    case LayerKind::Conv:
      j["kind"] = "conv";
      j["out_ch"] = s.out_ch;
      j["in_ch"] = s.in_ch;
      j["kh"] = s.kh;
      j["kw"] = s.kw;
      j["stride"] = s.stride;
      j["pad"] = s.pad;
      break;
    case LayerKind::LeakyReLU:
      j["kind"] = "leaky_relu";
      j["slope"] = s.slope;
      break;
    case LayerKind::MaxPool:
      j["kind"] = "max_pool";
      j["window"] = s.window;
      break;
    case LayerKind::AvgPool:
      j["kind"] = "avg_pool";
      j["window"] = s.window;
      break;
    case LayerKind::Flatten:
      j["kind"] = "flatten";
      break;
    case LayerKind::Residual: {
      j["kind"] = "residual";
      ordered_json branch = ordered_json::array();
      for (const auto& b : s.branch) branch.push_back(spec_to_json(b));
      j["branch"] = branch;
      break;
    }
  }
  return j;
}

LayerSpec spec_from_json(const ordered_json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "dense") return LayerSpec::dense(j.at("in"), j.at("out"));
  if (kind == "conv")
    return LayerSpec::conv(j.at("out_ch"), j.at("in_ch"), j.at("kh"), j.at("kw"),
                           j.value("stride", 1), j.value("pad", 0));
  if (kind == "leaky_relu") return LayerSpec::leaky_relu(j.value("slope", 0.01));
  if (kind == "max_pool") return LayerSpec::max_pool(j.at("window"));
  if (kind == "avg_pool") return LayerSpec::avg_pool(j.at("window"));
  if (kind == "flatten") return LayerSpec::flatten();
  if (kind == "residual") {
    std::vector<LayerSpec> branch;
    for (const auto& b : j.at("branch")) branch.push_back(spec_from_json(b));
    return LayerSpec::residual(std::move(branch));
  }
  raise(ErrorCode::Config, "unknown layer kind \"" + kind + "\"");
}

AttackKind attack_kind_from(const std::string& s) {
  if (s == "fgm") return AttackKind::Fgm;
  if (s == "pgd") return AttackKind::Pgd;
  raise(ErrorCode::Config, "unknown attack kind \"" + s + "\" (expected fgm|pgd)");
}

std::string attack_kind_name(AttackKind k) { return k == AttackKind::Fgm ? "fgm" : "pgd"; }

std::size_t count_param_specs(const std::vector<LayerSpec>& specs) {
  std::size_t c = 0;
  for (const auto& s : specs) {
    if (s.kind == LayerKind::Dense || s.kind == LayerKind::Conv)
      ++c;
    else if (s.kind == LayerKind::Residual)
      c += count_param_specs(s.branch);
  }
  return c;
}

}  // namespace

std::string ExperimentConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["semantics"] = regularizer.semantics == CapSemantics::Sigma ? "sigma" : "sigma2";
  ordered_json model;
  model["input"] = input_shape;
  ordered_json ls = ordered_json::array();
  for (const auto& s : layers) ls.push_back(spec_to_json(s));
  model["layers"] = ls;
  j["model"] = model;

  ordered_json ds;
  ds["kind"] = dataset.kind;
  if (dataset.kind == "idx") {
    ds["train_images"] = dataset.train_images;
    ds["train_labels"] = dataset.train_labels;
    ds["test_images"] = dataset.test_images;
    ds["test_labels"] = dataset.test_labels;
  } else {
    ds["classes"] = dataset.classes;
    ds["dim"] = dataset.dim;
    ds["per_class"] = dataset.per_class;
    ds["test_per_class"] = dataset.test_per_class;
    ds["seed"] = dataset.synth_seed;
    ds["separation"] = dataset.separation;
    ds["noise"] = dataset.noise;
  }
  j["dataset"] = ds;

  if (budgets) {
    ordered_json b;
    b["global"] = {{"delta", budgets->global.delta}, {"nu", budgets->global.nu}};
    b["policy"] = budgets->policy;
    ordered_json layers_json = ordered_json::array();
    for (const auto& lb : budgets->layers)
      layers_json.push_back({{"delta", lb.delta}, {"nu", lb.nu}});
    b["layers"] = layers_json;
    b["margin_out"] = budgets->plan.margin_out;
    b["margin_in"] = budgets->plan.margin_in;
    b["slack"] = budgets->plan.slack;
    j["budgets"] = b;
  } else {
    j["budgets"] = nullptr;
  }

  ordered_json reg;
  reg["mode"] = regularizer.mode == RegularizerMode::Projection ? "projection" : "off";
  reg["chosen"] = chosen_reg;
  if (regularizer.uniform_beta)
    reg["uniform_beta"] = *regularizer.uniform_beta;
  else
    reg["uniform_beta"] = nullptr;
  reg["train_power_iters"] = regularizer.train_power_iters;
  reg["cert_power_iters"] = regularizer.cert_power_iters;
  reg["tol"] = regularizer.tol;
  j["regularizer"] = reg;

  ordered_json opt;
  opt["kind"] = optimizer.kind == OptimizerKind::Adam ? "adam" : "sgd";
  opt["lr"] = optimizer.lr;
  opt["momentum"] = optimizer.momentum;
  opt["beta1"] = optimizer.beta1;
  opt["beta2"] = optimizer.beta2;
  opt["eps"] = optimizer.eps;
  opt["weight_decay"] = optimizer.weight_decay;
  j["optimizer"] = opt;

  j["train"] = {{"epochs", epochs}, {"batch_size", batch_size}};

  ordered_json adv;
  adv["enabled"] = adv_train.enabled;
  adv["kind"] = attack_kind_name(adv_train.kind);
  adv["eps"] = adv_train.eps;
  adv["k"] = adv_train.k;
  adv["alpha_ratio"] = adv_train.alpha_ratio;
  j["adversarial_training"] = adv;

  ordered_json sw;
  ordered_json kinds = ordered_json::array();
  for (auto k : sweep.kinds) kinds.push_back(attack_kind_name(k));
  sw["kinds"] = kinds;
  sw["eps"] = sweep.eps;
  sw["k"] = sweep.k;
  sw["alpha_ratio"] = sweep.alpha_ratio;
  sw["clip_box"] = sweep.clip_box;
  j["attack_sweep"] = sw;

  j["strict_cert"] = strict_cert;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    raise(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c.seed = j.value("seed", 1);
    if (j.contains("semantics")) {
      const std::string s = j["semantics"].get<std::string>();
      if (s == "sigma")
        c.regularizer.semantics = CapSemantics::Sigma;
      else if (s == "sigma2" || s == "sigma_squared")
        c.regularizer.semantics = CapSemantics::SigmaSquared;
      else
        raise(ErrorCode::Config, "semantics must be sigma|sigma2");
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      if (m.contains("input")) c.input_shape = m["input"].get<Shape>();
      c.layers.clear();
      for (const auto& l : m.at("layers")) c.layers.push_back(spec_from_json(l));
    }
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      c.dataset.kind = d.value("kind", "synth");
      c.dataset.train_images = d.value("train_images", "");
      c.dataset.train_labels = d.value("train_labels", "");
      c.dataset.test_images = d.value("test_images", "");
      c.dataset.test_labels = d.value("test_labels", "");
      c.dataset.classes = d.value("classes", 10);
      c.dataset.dim = d.value("dim", 64);
      c.dataset.per_class = d.value("per_class", 200);
      c.dataset.test_per_class = d.value("test_per_class", 40);
      c.dataset.synth_seed = d.value("seed", 7);
      c.dataset.separation = d.value("separation", 3.0);
      c.dataset.noise = d.value("noise", 1.0);
    }
    if (j.contains("budgets") && !j["budgets"].is_null()) {
      BudgetConfig b;
      b.global.delta = j["budgets"].at("global").at("delta");
      b.global.nu = j["budgets"].at("global").at("nu");
      b.policy = j["budgets"].value("policy", "default");
      if (j["budgets"].contains("layers"))
        for (const auto& lb : j["budgets"]["layers"])
          b.layers.push_back({lb.at("delta"), lb.at("nu")});
      b.plan.margin_out = j["budgets"].value("margin_out", 0.08);
      b.plan.margin_in = j["budgets"].value("margin_in", 0.03);
      b.plan.slack = j["budgets"].value("slack", 0.005);
      c.budgets = b;
    }
    if (j.contains("regularizer")) {
      const auto& r = j["regularizer"];
      const std::string mode = r.value("mode", "projection");
      if (mode == "projection")
        c.regularizer.mode = RegularizerMode::Projection;
      else if (mode == "off")
        c.regularizer.mode = RegularizerMode::Off;
      else
        raise(ErrorCode::Config, "regularizer mode must be projection|off");
      if (r.contains("chosen") && !r["chosen"].is_null())
        c.chosen_reg = r["chosen"].get<std::vector<double>>();
      if (r.contains("uniform_beta") && !r["uniform_beta"].is_null())
        c.regularizer.uniform_beta = r["uniform_beta"].get<double>();
      c.regularizer.train_power_iters = r.value("train_power_iters", 1);
      c.regularizer.cert_power_iters = r.value("cert_power_iters", 100);
      c.regularizer.tol = r.value("tol", 1e-3);
    }
    if (j.contains("optimizer")) {
      const auto& o = j["optimizer"];
      const std::string kind = o.value("kind", "adam");
      if (kind == "adam")
        c.optimizer.kind = OptimizerKind::Adam;
      else if (kind == "sgd")
        c.optimizer.kind = OptimizerKind::Sgd;
      else
        raise(ErrorCode::Config, "optimizer kind must be adam|sgd");
      c.optimizer.lr = o.value("lr", 1e-3);
      c.optimizer.momentum = o.value("momentum", 0.0);
      c.optimizer.beta1 = o.value("beta1", 0.9);
      c.optimizer.beta2 = o.value("beta2", 0.999);
      c.optimizer.eps = o.value("eps", 1e-8);
      c.optimizer.weight_decay = o.value("weight_decay", 0.0);
    }
    if (j.contains("train")) {
      c.epochs = j["train"].value("epochs", 20);
      c.batch_size = j["train"].value("batch_size", 100);
    }
    if (j.contains("adversarial_training")) {
      const auto& a = j["adversarial_training"];
      c.adv_train.enabled = a.value("enabled", false);
      c.adv_train.kind = attack_kind_from(a.value("kind", "fgm"));
      c.adv_train.eps = a.value("eps", 0.1);
      c.adv_train.k = a.value("k", 100);
      c.adv_train.alpha_ratio = a.value("alpha_ratio", 0.02);
    }
    if (j.contains("attack_sweep")) {
      const auto& s = j["attack_sweep"];
      if (s.contains("kinds")) {
        c.sweep.kinds.clear();
        for (const auto& k : s["kinds"]) c.sweep.kinds.push_back(attack_kind_from(k));
      }
      if (s.contains("eps")) c.sweep.eps = s["eps"].get<std::vector<double>>();
      c.sweep.k = s.value("k", 100);
      c.sweep.alpha_ratio = s.value("alpha_ratio", 0.02);
      c.sweep.clip_box = s.value("clip_box", false);
    }
    c.strict_cert = j.value("strict_cert", false);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorCode::Config, std::string("malformed config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) raise(ErrorCode::Io, "cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

void ExperimentConfig::resolve() {
  if (layers.empty()) raise(ErrorCode::Config, "config names no layers");
  for (const auto& s : layers) s.validate();
  const std::size_t nparams = count_param_specs(layers);

  if (!sweep.eps.empty()) {
    for (double e : sweep.eps)
      if (e < 0.0) raise(ErrorCode::Config, "attack eps values must be nonnegative");
    for (std::size_t i = 1; i < sweep.eps.size(); ++i)
      if (sweep.eps[i] < sweep.eps[i - 1])
        raise(ErrorCode::Config, "attack eps list must be ascending");
  }

  if (budgets) {
    budgets->global.validate();
    if (budgets->policy == "default") {
      budgets->layers = plan_parameters(nparams, budgets->global, budgets->plan);
    } else if (budgets->policy == "explicit") {
      if (budgets->layers.size() != nparams)
        raise(ErrorCode::Config, "explicit budgets: " + std::to_string(budgets->layers.size()) +
                                     " entries for " + std::to_string(nparams) +
                                     " parameterized layers");
      for (const auto& b : budgets->layers) b.validate();
      validate_plan(budgets->layers, budgets->global);
    } else {
      raise(ErrorCode::Config, "budget policy must be default|explicit");
    }
  }

  if (regularizer.mode == RegularizerMode::Projection && !regularizer.uniform_beta) {
    std::vector<double> caps;
    if (budgets)
      for (const auto& b : budgets->layers) caps.push_back(spectral_cap(b));
    if (chosen_reg.empty()) {
      if (!budgets)
        raise(ErrorCode::Config, "projection mode needs budgets or chosen regularization levels");
      regularizer.per_layer_beta = caps;
    } else {
      if (chosen_reg.size() != nparams)
        raise(ErrorCode::Config, "chosen regularization: " + std::to_string(chosen_reg.size()) +
                                     " entries for " + std::to_string(nparams) +
                                     " parameterized layers");
      if (budgets)
        for (std::size_t i = 0; i < chosen_reg.size(); ++i)
          if (chosen_reg[i] > caps[i] + 1e-9)
            raise(ErrorCode::Config,
                  "chosen regularization " + std::to_string(chosen_reg[i]) + " at layer " +
                      std::to_string(i + 1) + " exceeds its spectral cap " +
                      std::to_string(caps[i]));
      regularizer.per_layer_beta = chosen_reg;
    }
  }
  regularizer.validate(nparams);
}

std::pair<Dataset, Dataset> load_datasets(const DatasetConfig& cfg) {
  if (cfg.kind == "idx") {
    Dataset train = load_mnist_idx(cfg.train_images, cfg.train_labels);
    Dataset test = load_mnist_idx(cfg.test_images, cfg.test_labels);
    return {std::move(train), std::move(test)};
  }
  if (cfg.kind == "synth") {
    return synth_split(cfg.classes, cfg.dim, cfg.per_class, cfg.test_per_class, cfg.synth_seed,
                       cfg.separation, cfg.noise);
  }
  raise(ErrorCode::Config, "dataset kind must be idx|synth");
}

ModelF train_model(const ExperimentConfig& cfg, const Dataset& train, const EpochHook& hook) {
  Rng rng(cfg.seed);
  ModelF model = ModelF::build(cfg.layers, cfg.input_shape, rng);
  if (train.sample_shape != cfg.input_shape &&
      shape_numel(train.sample_shape) != shape_numel(cfg.input_shape))
    raise(ErrorCode::Config, "dataset samples " + shape_str(train.sample_shape) +
                                 " do not fit model input " + shape_str(cfg.input_shape));
  Optimizer<float> opt(cfg.optimizer, model);
  Rng reg_rng = rng.fork(0x5eed);

  // Initial projection so epoch 1 starts inside the feasible set.
  apply_constraints(model, cfg.regularizer, reg_rng);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  AttackConfig adv;
  adv.kind = cfg.adv_train.kind;
  adv.eps = cfg.adv_train.eps;
  adv.k = cfg.adv_train.k;
  adv.alpha_ratio = cfg.adv_train.alpha_ratio;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng erng = rng.fork(epoch + 1);
    shuffle(order, erng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), at + cfg.batch_size);
      std::vector<std::size_t> idx(order.begin() + at, order.begin() + hi);
      TensorF x = train.batch(idx);
      x.shape = detail::batched(cfg.input_shape, idx.size());
      std::vector<std::uint8_t> y(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) y[i] = train.labels[idx[i]];

      if (cfg.adv_train.enabled && adv.eps > 0.0) {
        x = run_attack(model, x, y, adv);
      }
      ModelCache<float> cache;
      const TensorF logits = model.forward(x, &cache);
      const LossResult<float> loss = cross_entropy(logits, y);
      std::vector<ParamGrad<float>> grads;
      model.backward(cache, loss.grad, &grads);
      opt.step(model, grads);
      apply_constraints(model, cfg.regularizer, reg_rng);
      loss_sum += loss.loss;
      ++batches;
    }
    // Certification-grade enforcement + measurement at the epoch boundary.
    Rng cert_rng(cfg.seed ^ 0xce27000000ULL ^ (epoch + 1));
    const std::vector<double> sigmas = enforce_and_measure(model, cfg.regularizer, cert_rng);
    model.ensure_params_finite("train epoch end");
    if (hook) hook(EpochStats{epoch + 1, batches > 0 ? loss_sum / batches : 0.0, sigmas});
  }
  return model;
}

ExperimentReport evaluate_model(const ExperimentConfig& cfg, ModelF& model, const Dataset& test) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.config_json = cfg.to_json();
  rep.config_digest = fnv1a64(rep.config_json);
  rep.seed = cfg.seed;
  rep.semantics = cfg.regularizer.semantics == CapSemantics::Sigma ? "sigma" : "sigma2";

  Rng cert_rng(cfg.seed ^ 0xfeedULL);
  rep.per_layer_sigma = enforce_and_measure(model, cfg.regularizer, cert_rng);

  rep.clean_accuracy = clean_accuracy(model, test);

  if (cfg.budgets) {
    rep.certificate = certify(cfg.budgets->layers, cfg.budgets->global, cfg.strict_cert);
    rep.cert_budgets = cfg.budgets->layers;
    rep.cert_global = cfg.budgets->global;
  }

  for (AttackKind kind : cfg.sweep.kinds) {
    for (double eps : cfg.sweep.eps) {
      AttackConfig a;
      a.kind = kind;
      a.eps = eps;
      a.k = cfg.sweep.k;
      a.alpha_ratio = cfg.sweep.alpha_ratio;
      a.clip_box = cfg.sweep.clip_box;
      SweepRow row;
      row.attack = kind == AttackKind::Fgm ? "fgm" : "pgd";
      row.eps = eps;
      row.robust_accuracy = robust_accuracy(model, test, a);
      row.mean_deviation = measure_deviation(model, test, a);
      if (cfg.budgets) {
        row.corollary_bound = corollary_bound(cfg.budgets->global, eps);
        row.table_bound = table_bound(cfg.budgets->global, eps);
        row.bound_satisfied = row.mean_deviation <= row.table_bound;
      }
      rep.sweep.push_back(row);
    }
  }
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::string certificate_to_json(const CascadeCertificate& cert, const Budgets& budgets,
                                const GlobalBudget& g) {
  ordered_json j;
  j["global"] = {{"delta", g.delta}, {"nu", g.nu}, {"gain", g.gain()}};
  ordered_json bl = ordered_json::array();
  for (const auto& b : budgets) bl.push_back({{"delta", b.delta}, {"nu", b.nu}});
  j["budgets"] = bl;
  j["caps"] = cert.caps;
  const std::size_t m = cert.a.shape[0];
  ordered_json rows = ordered_json::array();
  ordered_json neg_rows = ordered_json::array();
  double fro = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    ordered_json r = ordered_json::array(), nr = ordered_json::array();
    for (std::size_t k = 0; k < m; ++k) {
      r.push_back(cert.a.at(i, k));
      nr.push_back(-cert.a.at(i, k));
      fro += cert.a.at(i, k) * cert.a.at(i, k);
    }
    rows.push_back(r);
    neg_rows.push_back(nr);
  }
  j["matrix_a"] = rows;
  j["matrix_neg_a"] = neg_rows;
  j["frobenius_norm"] = std::sqrt(fro);
  ordered_json qd;
  qd["verdict"] = cert.quasi_dominant.pass ? "pass" : "fail";
  qd["witness"] = cert.quasi_dominant.witness;
  qd["note"] = cert.quasi_dominant.note;
  j["quasi_dominant"] = qd;
  ordered_json viols = ordered_json::array();
  for (const auto& v : cert.remark3_violations)
    viols.push_back({{"constraint", v.constraint}, {"layer", v.layer}, {"value", v.value}});
  j["remark3_violations"] = viols;
  j["coefficient_c"] = cert.coefficient_c;
  j["strict"] = cert.strict;
  j["status"] = cert.pass ? "pass" : "fail";
  j["notes"] = cert.notes;
  return j.dump(2);
}

std::string report_to_json(const ExperimentReport& report) {
  ordered_json j;
  j["config"] = ordered_json::parse(report.config_json);
  j["config_digest"] = report.config_digest;
  j["seed"] = report.seed;
  j["semantics"] = report.semantics;
  j["clean_accuracy"] = report.clean_accuracy;
  j["per_layer_sigma"] = report.per_layer_sigma;
  if (report.certificate) {
    j["certificate"] = ordered_json::parse(
        certificate_to_json(*report.certificate, report.cert_budgets, report.cert_global));
  } else {
    j["certificate"] = nullptr;
  }
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.sweep) {
    ordered_json row;
    row["attack"] = r.attack;
    row["eps"] = r.eps;
    row["robust_accuracy"] = r.robust_accuracy;
    row["mean_deviation"] = r.mean_deviation;
    row["corollary_bound"] = r.corollary_bound;
    row["table_bound"] = r.table_bound;
    row["bound_satisfied"] = r.bound_satisfied;
    rows.push_back(row);
  }
  j["sweep"] = rows;
  j["runtime_seconds"] = report.runtime_seconds;
  j["log"] = report.log_lines;
  return j.dump(2);
}

std::string sweep_to_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "attack,eps,robust_accuracy,mean_deviation,corollary_bound,table_bound,bound_satisfied\n";
  os.precision(10);
  for (const auto& r : report.sweep)
    os << r.attack << "," << r.eps << "," << r.robust_accuracy << "," << r.mean_deviation << ","
       << r.corollary_bound << "," << r.table_bound << "," << (r.bound_satisfied ? 1 : 0) << "\n";
  return os.str();
}

}  // namespace lyapnet
