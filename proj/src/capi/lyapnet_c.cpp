#include "lyapnet/lyapnet.h"

#include <cstring>
#include <string>

#include "cert/bounds.hpp"
#include "cert/cascade.hpp"
#include "cert/planner.hpp"
#include "core/exact_norm.hpp"
#include "data/dataset.hpp"
#include "harness/experiment.hpp"
#include "io/checkpoint.hpp"

using namespace lyapnet;

struct lyap_dataset {
  Dataset data;
};

struct lyap_model {
  ModelF model;
};

namespace {

thread_local std::string g_last_error = "";

lyap_status map_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::None: return LYAP_OK;
    case ErrorCode::Shape: return LYAP_ERR_SHAPE;
    case ErrorCode::Numeric: return LYAP_ERR_NUMERIC;
    case ErrorCode::Size: return LYAP_ERR_SIZE;
    case ErrorCode::Budget: return LYAP_ERR_BUDGET;
    case ErrorCode::Config: return LYAP_ERR_CONFIG;
    case ErrorCode::Input: return LYAP_ERR_INPUT;
    case ErrorCode::Format: return LYAP_ERR_FORMAT;
    case ErrorCode::Contract: return LYAP_ERR_CONTRACT;
    case ErrorCode::Planning: return LYAP_ERR_PLANNING;
    case ErrorCode::DegenerateCone: return LYAP_ERR_DEGENERATE_CONE;
    case ErrorCode::ComplexSlopes: return LYAP_ERR_COMPLEX_SLOPES;
    case ErrorCode::Io: return LYAP_ERR_IO;
    case ErrorCode::Usage: return LYAP_ERR_USAGE;
  }
  return LYAP_ERR_UNKNOWN;
}

template <typename Fn>
lyap_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LYAP_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LYAP_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown failure";
    return LYAP_ERR_UNKNOWN;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) raise(ErrorCode::Usage, what);
}

}  // namespace

extern "C" {

const char* lyap_status_name(lyap_status s) {
  switch (s) {
    case LYAP_OK: return "ok";
    case LYAP_ERR_SHAPE: return "shape-error";
    case LYAP_ERR_NUMERIC: return "numeric-error";
    case LYAP_ERR_SIZE: return "size-error";
    case LYAP_ERR_BUDGET: return "budget-error";
    case LYAP_ERR_CONFIG: return "config-error";
    case LYAP_ERR_INPUT: return "input-error";
    case LYAP_ERR_FORMAT: return "format-error";
    case LYAP_ERR_CONTRACT: return "contract-error";
    case LYAP_ERR_PLANNING: return "planning-error";
    case LYAP_ERR_DEGENERATE_CONE: return "degenerate-cone-error";
    case LYAP_ERR_COMPLEX_SLOPES: return "complex-slopes-error";
    case LYAP_ERR_IO: return "io-error";
    case LYAP_ERR_USAGE: return "usage-error";
    case LYAP_ERR_UNKNOWN: return "unknown-error";
  }
  return "unknown-error";
}

const char* lyap_last_error(void) { return g_last_error.c_str(); }

void lyap_string_free(char* s) { delete[] s; }

lyap_status lyap_spectral_cap(double delta, double nu, double* out_beta) {
  return guarded([&] {
    require(out_beta != nullptr, "out_beta is NULL");
    *out_beta = spectral_cap(LayerBudget{delta, nu});
  });
}

lyap_status lyap_corollary_bound(double delta, double nu, double eps, double* out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    *out = corollary_bound(GlobalBudget{delta, nu}, eps);
  });
}

lyap_status lyap_table_bound(double delta, double nu, double eps, double* out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    *out = table_bound(GlobalBudget{delta, nu}, eps);
  });
}

lyap_status lyap_residual_effective_budget(double delta, double nu, double* out_delta,
                                           double* out_nu) {
  return guarded([&] {
    require(out_delta != nullptr && out_nu != nullptr, "output pointer is NULL");
    const LayerBudget b = residual_effective_budget(LayerBudget{delta, nu});
    *out_delta = b.delta;
    *out_nu = b.nu;
  });
}

lyap_status lyap_conic_from_slopes(double a, double b, double* out_delta, double* out_nu) {
  return guarded([&] {
    require(out_delta != nullptr && out_nu != nullptr, "output pointer is NULL");
    const auto [d, n] = conic_from_slopes(a, b);
    *out_delta = d;
    *out_nu = n;
  });
}

lyap_status lyap_slopes_from_budget(double delta, double nu, double* out_a, double* out_b) {
  return guarded([&] {
    require(out_a != nullptr && out_b != nullptr, "output pointer is NULL");
    const auto [a, b] = slopes_from_budget(delta, nu);
    *out_a = a;
    *out_b = b;
  });
}

lyap_status lyap_quasi_dominant(const double* matrix, size_t n, double tol, int* verdict,
                                double* witness) {
  return guarded([&] {
    require(matrix != nullptr && verdict != nullptr, "matrix/verdict is NULL");
    require(n > 0, "matrix size must be positive");
    Tensor<double> m({n, n}, std::vector<double>(matrix, matrix + n * n));
    const auto res = is_quasi_dominant(m, tol > 0 ? tol : 1e-9);
    *verdict = res.pass ? 1 : 0;
    if (witness != nullptr && res.pass)
      std::copy(res.witness.begin(), res.witness.end(), witness);
  });
}

lyap_status lyap_certify(const double* deltas, const double* nus, size_t n, double global_delta,
                         double global_nu, int strict, char** json_out) {
  return guarded([&] {
    require(deltas != nullptr && nus != nullptr && json_out != nullptr, "pointer is NULL");
    Budgets budgets(n);
    for (size_t i = 0; i < n; ++i) budgets[i] = {deltas[i], nus[i]};
    const GlobalBudget g{global_delta, global_nu};
    const CascadeCertificate cert = certify(budgets, g, strict != 0);
    *json_out = dup_string(certificate_to_json(cert, budgets, g));
  });
}

lyap_status lyap_plan(size_t n, double global_delta, double global_nu, double margin_out,
                      double margin_in, double slack, char** json_out) {
  return guarded([&] {
    require(json_out != nullptr, "json_out is NULL");
    PlanPolicy policy;
    if (margin_out > 0) policy.margin_out = margin_out;
    if (margin_in > 0) policy.margin_in = margin_in;
    if (slack > 0) policy.slack = slack;
    const GlobalBudget g{global_delta, global_nu};
    const Budgets budgets = plan_parameters(n, g, policy);
    const CascadeCertificate cert = certify(budgets, g, false);
    *json_out = dup_string(certificate_to_json(cert, budgets, g));
  });
}

lyap_status lyap_dataset_load_idx(const char* images_path, const char* labels_path,
                                  lyap_dataset** out) {
  return guarded([&] {
    require(images_path != nullptr && labels_path != nullptr && out != nullptr,
            "pointer is NULL");
    auto* d = new lyap_dataset{load_mnist_idx(images_path, labels_path)};
    *out = d;
  });
}

lyap_status lyap_dataset_synth(size_t classes, size_t dim, size_t per_class, uint64_t seed,
                               lyap_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    auto* d = new lyap_dataset{synth_dataset(classes, dim, per_class, seed)};
    *out = d;
  });
}

void lyap_dataset_free(lyap_dataset* d) { delete d; }

size_t lyap_dataset_size(const lyap_dataset* d) { return d != nullptr ? d->data.size() : 0; }
size_t lyap_dataset_dim(const lyap_dataset* d) { return d != nullptr ? d->data.sample_dim() : 0; }
size_t lyap_dataset_classes(const lyap_dataset* d) {
  return d != nullptr ? d->data.num_classes : 0;
}

lyap_status lyap_model_load(const char* path, lyap_model** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "pointer is NULL");
    auto loaded = load_checkpoint(path);
    *out = new lyap_model{std::move(loaded.model)};
  });
}

lyap_status lyap_model_save(const lyap_model* m, const char* path) {
  return guarded([&] {
    require(m != nullptr && path != nullptr, "pointer is NULL");
    save_checkpoint(m->model, path, 0);
  });
}

void lyap_model_free(lyap_model* m) { delete m; }

lyap_status lyap_model_spectra(const lyap_model* m, uint32_t iters, int with_exact,
                               char** json_out) {
  return guarded([&] {
    require(m != nullptr && json_out != nullptr, "pointer is NULL");
    ModelD probe = m->model.cast<double>();
    Rng rng(0x5bec72a1);
    std::string out = "{\n  \"sigma\": [";
    std::string exact = "  \"exact\": [";
    auto& params = probe.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto op = layer_operator(params[i]);
      PowerState<double> st = random_power_state(*op, rng);
      const double sigma = power_iteration(*op, iters == 0 ? 100 : iters, 0.0, st, &rng);
      out += (i ? ", " : "") + std::to_string(sigma);
      std::string ex = "null";
      if (with_exact != 0) {
        const std::size_t rows = shape_numel(op->out_shape());
        const std::size_t cols = shape_numel(op->in_shape());
        if (rows <= 256 && cols <= 256) {
          Tensor<double> mat;
          if (params[i].layer->kind() == LayerKind::Dense) {
            mat = *params[i].layer->weight();
          } else {
            auto* conv = static_cast<ConvLayer<double>*>(params[i].layer);
            mat = materialize_conv_matrix(
                *params[i].layer->weight(),
                conv->geometry(params[i].in_sample_shape[1], params[i].in_sample_shape[2]));
          }
          ex = std::to_string(spectral_norm_exact(mat));
        }
      }
      exact += (i ? ", " : "") + ex;
    }
    out += "],\n" + exact + "]\n}\n";
    *json_out = dup_string(out);
  });
}

lyap_status lyap_model_forward(const lyap_model* m, const float* batch, size_t n, size_t in_dim,
                               float* out, size_t out_dim) {
  return guarded([&] {
    require(m != nullptr && batch != nullptr && out != nullptr, "pointer is NULL");
    const Shape& in_shape = m->model.input_shape();
    if (in_dim != shape_numel(in_shape))
      raise(ErrorCode::Shape, "lyap_model_forward: in_dim does not match model input");
    Shape s{n};
    s.insert(s.end(), in_shape.begin(), in_shape.end());
    TensorF x(s, std::vector<float>(batch, batch + n * in_dim));
    const TensorF y = m->model.forward(x);
    if (n > 0 && y.numel() / n != out_dim)
      raise(ErrorCode::Shape, "lyap_model_forward: out_dim does not match model output");
    std::copy(y.data.begin(), y.data.end(), out);
  });
}

lyap_status lyap_train(const char* config_json, const lyap_dataset* train, lyap_model** out_model,
                       char** log_json_out) {
  return guarded([&] {
    require(config_json != nullptr && out_model != nullptr, "pointer is NULL");
    ExperimentConfig cfg = ExperimentConfig::from_json(config_json);
    cfg.resolve();
    Dataset train_data;
    if (train != nullptr) {
      train_data = train->data;
    } else {
      auto [tr, te] = load_datasets(cfg.dataset);
      train_data = std::move(tr);
    }
    std::string log = "[";
    bool first = true;
    ModelF model = train_model(cfg, train_data, [&](const EpochStats& st) {
      if (!first) log += ",";
      first = false;
      log += "\n  {\"epoch\": " + std::to_string(st.epoch) +
             ", \"train_loss\": " + std::to_string(st.train_loss) + ", \"sigma\": [";
      for (std::size_t i = 0; i < st.sigma.size(); ++i)
        log += (i ? ", " : "") + std::to_string(st.sigma[i]);
      log += "]}";
    });
    log += "\n]\n";
    *out_model = new lyap_model{std::move(model)};
    if (log_json_out != nullptr) *log_json_out = dup_string(log);
  });
}

lyap_status lyap_evaluate(const char* config_json, lyap_model* model, const lyap_dataset* test,
                          char** report_json_out, char** csv_out) {
  return guarded([&] {
    require(config_json != nullptr && model != nullptr, "pointer is NULL");
    ExperimentConfig cfg = ExperimentConfig::from_json(config_json);
    cfg.resolve();
    Dataset test_data;
    if (test != nullptr) {
      test_data = test->data;
    } else {
      auto [tr, te] = load_datasets(cfg.dataset);
      test_data = std::move(te);
    }
    const ExperimentReport rep = evaluate_model(cfg, model->model, test_data);
    if (report_json_out != nullptr) *report_json_out = dup_string(report_to_json(rep));
    if (csv_out != nullptr) *csv_out = dup_string(sweep_to_csv(rep));
  });
}

}  // extern "C"
