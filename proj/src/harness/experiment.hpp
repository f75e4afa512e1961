#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "attack/attacks.hpp"
#include "cert/cascade.hpp"
#include "cert/planner.hpp"
#include "data/dataset.hpp"
#include "harness/eval.hpp"
#include "nn/optimizer.hpp"

namespace lyapnet {

struct DatasetConfig {
  std::string kind = "synth";  // "idx" | "synth"
  // idx
  std::string train_images, train_labels, test_images, test_labels;
  // synth
  std::size_t classes = 10, dim = 64, per_class = 200, test_per_class = 40;
  std::uint64_t synth_seed = 7;
  double separation = 3.0, noise = 1.0;
};

struct BudgetConfig {
  GlobalBudget global;
  std::string policy = "default";  // "default" | "explicit"
  Budgets layers;                  // used by the explicit policy
  PlanPolicy plan;
};

struct SweepConfig {
  std::vector<AttackKind> kinds{AttackKind::Pgd};
  std::vector<double> eps{0.1, 0.2, 0.3};
  std::size_t k = 100;
  double alpha_ratio = 0.02;
  bool clip_box = false;
};

struct AdvTrainConfig {
  bool enabled = false;
  AttackKind kind = AttackKind::Fgm;
  double eps = 0.1;
  std::size_t k = 100;
  double alpha_ratio = 0.02;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::vector<LayerSpec> layers;
  Shape input_shape{784};
  DatasetConfig dataset;
  std::optional<BudgetConfig> budgets;        // absent: no certificate, no caps
  std::vector<double> chosen_reg;             // per parameterized layer; empty = use caps
  RegularizerConfig regularizer;
  OptimizerConfig optimizer;
  std::size_t epochs = 20;
  std::size_t batch_size = 100;
  AdvTrainConfig adv_train;
  SweepConfig sweep;
  bool strict_cert = false;

  std::string to_json() const;                       // resolved, field order stable
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);

  // Applies planning policy, fills regularizer betas from chosen_reg/caps and
  // validates every cross-field invariant. Raises config-error/planning-error.
  void resolve();
};

struct SweepRow {
  std::string attack;
  double eps = 0.0;
  double robust_accuracy = 0.0;
  double mean_deviation = 0.0;
  double corollary_bound = 0.0;
  double table_bound = 0.0;
  bool bound_satisfied = false;
};

struct ExperimentReport {
  std::string config_json;
  std::uint64_t config_digest = 0;
  std::uint64_t seed = 0;
  double clean_accuracy = 0.0;
  std::vector<double> per_layer_sigma;
  std::optional<CascadeCertificate> certificate;
  Budgets cert_budgets;
  GlobalBudget cert_global;
  std::vector<SweepRow> sweep;
  std::string semantics = "sigma";
  double runtime_seconds = 0.0;
  std::vector<std::string> log_lines;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::vector<double> sigma;  // certification-grade re-estimate per layer
};

using EpochHook = std::function<void(const EpochStats&)>;

// Loads (or synthesizes) the train/test pair named by the config.
std::pair<Dataset, Dataset> load_datasets(const DatasetConfig& cfg);

// Trains a model per the config: seeded init, mini-batch cross-entropy,
// optional adversarial training, spectral projection after every optimizer
// step and a certification-grade enforcement pass at each epoch end.
ModelF train_model(const ExperimentConfig& cfg, const Dataset& train, const EpochHook& hook = {});

// Full evaluation sweep producing the bound-verification rows.
ExperimentReport evaluate_model(const ExperimentConfig& cfg, ModelF& model, const Dataset& test);

std::string report_to_json(const ExperimentReport& report);
std::string sweep_to_csv(const ExperimentReport& report);
std::string certificate_to_json(const CascadeCertificate& cert, const Budgets& budgets,
                                const GlobalBudget& g);

}  // namespace lyapnet
