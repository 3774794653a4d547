#include "ild/ild.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "ild/canonical.hpp"
#include "ild/datagen.hpp"
#include "ild/error.hpp"
#include "ild/io.hpp"
#include "ild/train.hpp"

struct ild_model {
  ild::ILDModel model;
};

struct ild_dataset {
  int dim = 0;
  ild::Samples samples;
};

namespace {

thread_local std::string last_error;

ild_status to_status(ild::ErrorCode code) {
  using ild::ErrorCode;
  switch (code) {
    case ErrorCode::DimensionMismatch: return ILD_ERR_DIMENSION_MISMATCH;
    case ErrorCode::NotLowerTriangular: return ILD_ERR_NOT_LOWER_TRIANGULAR;
    case ErrorCode::NonPositiveDiagonal: return ILD_ERR_NON_POSITIVE_DIAGONAL;
    case ErrorCode::SingularMatrix: return ILD_ERR_SINGULAR_MATRIX;
    case ErrorCode::InvalidArgument: return ILD_ERR_INVALID_ARGUMENT;
    case ErrorCode::DomainOutOfRange: return ILD_ERR_DOMAIN_OUT_OF_RANGE;
    case ErrorCode::EmptyInput: return ILD_ERR_EMPTY_INPUT;
    case ErrorCode::PreconditionViolated: return ILD_ERR_PRECONDITION_VIOLATED;
    case ErrorCode::TriangularityBroken: return ILD_ERR_TRIANGULARITY_BROKEN;
    case ErrorCode::Parse: return ILD_ERR_PARSE;
    case ErrorCode::Io: return ILD_ERR_IO;
  }
  return ILD_ERR_INTERNAL;
}

template <class F>
ild_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return ILD_OK;
  } catch (const ild::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return ILD_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return ILD_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return ILD_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return ILD_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  ild::require(p != nullptr, ild::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ild::Vec read_vec(const double* x, int n) { return Eigen::Map<const ild::Vec>(x, n); }

void write_vec(const ild::Vec& v, double* out) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i];
}

ild_dataset* make_dataset(int dim, ild::Samples samples) {
  for (const auto& s : samples) {
    ild::require(s.d >= 1, ild::ErrorCode::DomainOutOfRange, "domain labels start at 1");
  }
  return new ild_dataset{dim, std::move(samples)};
}

}  // namespace

extern "C" {

const char* ild_version(void) { return "1.0.0"; }

const char* ild_status_name(ild_status status) {
  switch (status) {
    case ILD_OK: return "ok";
    case ILD_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case ILD_ERR_NOT_LOWER_TRIANGULAR: return "not lower triangular";
    case ILD_ERR_NON_POSITIVE_DIAGONAL: return "non-positive diagonal";
    case ILD_ERR_SINGULAR_MATRIX: return "singular matrix";
    case ILD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case ILD_ERR_DOMAIN_OUT_OF_RANGE: return "domain out of range";
    case ILD_ERR_EMPTY_INPUT: return "empty input";
    case ILD_ERR_PRECONDITION_VIOLATED: return "precondition violated";
    case ILD_ERR_TRIANGULARITY_BROKEN: return "triangularity broken";
    case ILD_ERR_PARSE: return "parse error";
    case ILD_ERR_IO: return "i/o error";
    case ILD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ild_last_error(void) { return last_error.c_str(); }

void ild_string_free(char* s) { delete[] s; }

ild_status ild_model_from_json(const char* json, ild_model** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new ild_model{ild::io::model_from_json(nlohmann::json::parse(json))};
  });
}

ild_status ild_model_load(const char* path, ild_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const std::string text = ild::io::read_file(path);
    *out = new ild_model{ild::io::model_from_json(nlohmann::json::parse(text))};
  });
}

ild_status ild_model_to_json(const ild_model* model, char** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = dup_string(ild::io::to_json(model->model).dump(2));
  });
}

ild_status ild_model_save(const ild_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    ild::io::write_file(path, ild::io::to_json(model->model).dump(2) + "\n");
  });
}

void ild_model_free(ild_model* model) { delete model; }

int ild_model_dim(const ild_model* model) { return model ? model->model.dim() : 0; }

int ild_model_num_domains(const ild_model* model) {
  return model ? model->model.num_domains() : 0;
}

ild_status ild_sample(const ild_model* model, int d, int n, uint64_t seed, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    const int m = model->model.dim();
    const auto xs = ild::ild_sample(model->model, d, n, seed);
    for (std::size_t i = 0; i < xs.size(); ++i) write_vec(xs[i], out + i * m);
  });
}

ild_status ild_log_likelihood(const ild_model* model, const double* x, int d, double* out) {
  return guarded([&] {
    need(model, "model");
    need(x, "x");
    need(out, "out");
    *out = ild::ild_log_likelihood(model->model, read_vec(x, model->model.dim()), d);
  });
}

ild_status ild_counterfactual(const ild_model* model, const double* x, int d, int d_prime,
                              double* out) {
  return guarded([&] {
    need(model, "model");
    need(x, "x");
    need(out, "out");
    write_vec(ild::counterfactual(model->model, read_vec(x, model->model.dim()), d, d_prime), out);
  });
}

ild_status ild_intervention_set(const ild_model* model, double tol, char** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = dup_string(ild::io::to_json(ild::intervention_set(model->model.scms(), tol)).dump());
  });
}

ild_status ild_lipschitz_bound(const ild_model* model, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = ild::lipschitz_upper_bound(model->model.g());
  });
}

ild_status ild_gt_bound_term(const ild_model* model, int n_mc, uint64_t seed, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = ild::ground_truth_bound_term(model->model, n_mc, seed);
  });
}

ild_status ild_canonicalize(const ild_model* model, double tol, ild_model** canonical,
                            ild_model** identity_canonical, char** report_json) {
  return guarded([&] {
    need(model, "model");
    auto result = ild::canonicalize(model->model, tol);
    // Allocate everything before handing ownership out.
    std::string report = ild::io::to_json(result.report).dump(2);
    auto* c = canonical ? new ild_model{std::move(result.canonical)} : nullptr;
    auto* ic = identity_canonical ? new ild_model{std::move(result.identity_canonical)} : nullptr;
    char* r = report_json ? dup_string(report) : nullptr;
    if (canonical) *canonical = c;
    if (identity_canonical) *identity_canonical = ic;
    if (report_json) *report_json = r;
  });
}

ild_status ild_dc_distance(const ild_model* a, const ild_model* b, const ild_dataset* data,
                           uint64_t seed, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(data, "data");
    need(out, "out");
    *out = ild::dc_distance(a->model, b->model, data->samples, seed);
  });
}

ild_status ild_dataset_create(int dim, size_t n, const int* domains, const double* x,
                              ild_dataset** out) {
  return guarded([&] {
    need(out, "out");
    ild::require(dim > 0, ild::ErrorCode::InvalidArgument, "dataset dim must be positive");
    if (n > 0) {
      need(domains, "domains");
      need(x, "x");
    }
    ild::Samples samples(n);
    for (size_t i = 0; i < n; ++i) samples[i] = {read_vec(x + i * dim, dim), domains[i]};
    *out = make_dataset(dim, std::move(samples));
  });
}

ild_status ild_dataset_load_csv(const char* path, ild_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const std::string text = ild::io::read_file(path);
    const auto header_end = text.find('\n');
    const std::string header = text.substr(0, header_end);
    const int dim = static_cast<int>(std::count(header.begin(), header.end(), ','));
    *out = make_dataset(dim, ild::io::samples_from_csv(text));
  });
}

ild_status ild_dataset_save_csv(const ild_dataset* data, const char* path) {
  return guarded([&] {
    need(data, "data");
    need(path, "path");
    ild::io::write_file(path, ild::io::samples_to_csv(data->samples, data->dim));
  });
}

ild_status ild_dataset_to_csv(const ild_dataset* data, char** out) {
  return guarded([&] {
    need(data, "data");
    need(out, "out");
    *out = dup_string(ild::io::samples_to_csv(data->samples, data->dim));
  });
}

void ild_dataset_free(ild_dataset* data) { delete data; }

size_t ild_dataset_size(const ild_dataset* data) { return data ? data->samples.size() : 0; }

int ild_dataset_dim(const ild_dataset* data) { return data ? data->dim : 0; }

ild_status ild_dataset_get(const ild_dataset* data, size_t i, int* d, double* x) {
  return guarded([&] {
    need(data, "data");
    ild::require(i < data->samples.size(), ild::ErrorCode::InvalidArgument,
                 "dataset index out of range");
    if (d) *d = data->samples[i].d;
    if (x) write_vec(data->samples[i].x, x);
  });
}

ild_status ild_spec_normalize(const char* spec_json, char** out) {
  return guarded([&] {
    need(spec_json, "spec_json");
    need(out, "out");
    const auto spec = ild::io::spec_from_json(nlohmann::json::parse(spec_json));
    *out = dup_string(ild::io::to_json(spec).dump(2));
  });
}

ild_status ild_generate(const char* spec_json, ild_model** ground_truth, ild_dataset** train,
                        ild_dataset** val, ild_dataset** test) {
  return guarded([&] {
    need(spec_json, "spec_json");
    const auto spec = ild::io::spec_from_json(nlohmann::json::parse(spec_json));
    const ild::ILDModel gt = ild::generate_ground_truth(spec);
    ild::MultiDomainDataset data = ild::sample_dataset(gt, spec);
    auto* g = ground_truth ? new ild_model{gt} : nullptr;
    auto* tr = train ? make_dataset(spec.dim, std::move(data.train)) : nullptr;
    auto* va = val ? make_dataset(spec.dim, std::move(data.val)) : nullptr;
    auto* te = test ? make_dataset(spec.dim, std::move(data.test)) : nullptr;
    if (ground_truth) *ground_truth = g;
    if (train) *train = tr;
    if (val) *val = va;
    if (test) *test = te;
  });
}

ild_status ild_train_config_normalize(const char* config_json, char** out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(out, "out");
    const auto config = ild::io::train_config_from_json(nlohmann::json::parse(config_json));
    *out = dup_string(ild::io::to_json(config).dump(2));
  });
}

ild_status ild_train(const char* variant_json, const char* config_json, const ild_dataset* train,
                     const ild_dataset* val, int num_domains, ild_model** best,
                     char** history_csv, char** optimizer_json) {
  return guarded([&] {
    need(variant_json, "variant_json");
    need(config_json, "config_json");
    need(train, "train");
    need(val, "val");
    need(best, "best");
    ild::require(train->dim == val->dim, ild::ErrorCode::DimensionMismatch,
                 "train and validation splits differ in dimension");
    for (const auto* split : {train, val}) {
      for (const auto& s : split->samples) {
        ild::require(s.d >= 1 && s.d <= num_domains, ild::ErrorCode::DomainOutOfRange,
                     "sample domain label " + std::to_string(s.d) + " outside [1, " +
                         std::to_string(num_domains) + "]");
      }
    }
    const auto variant = ild::io::variant_from_json(nlohmann::json::parse(variant_json));
    const auto config = ild::io::train_config_from_json(nlohmann::json::parse(config_json));
    const auto init =
        ild::TrainableILD::initialized(variant, train->dim, num_domains, config.seed);
    ild::TrainResult result = ild::train(init, train->samples, val->samples, config);
    std::string history = ild::io::history_to_csv(result.history);
    std::string optimizer = ild::io::to_json(result.optimizer).dump();
    auto* b = new ild_model{std::move(result.best_model)};
    char* h = history_csv ? dup_string(history) : nullptr;
    char* o = optimizer_json ? dup_string(optimizer) : nullptr;
    *best = b;
    if (history_csv) *history_csv = h;
    if (optimizer_json) *optimizer_json = o;
  });
}

ild_status ild_counterfactual_error(const ild_model* estimated, const ild_model* ground_truth,
                                    const ild_dataset* test, double* out) {
  return guarded([&] {
    need(estimated, "estimated");
    need(ground_truth, "ground_truth");
    need(test, "test");
    need(out, "out");
    *out = ild::oracle_counterfactual_error(estimated->model, ground_truth->model, test->samples);
  });
}

ild_status ild_dataset_nll(const ild_model* model, const ild_dataset* data, double* out) {
  return guarded([&] {
    need(model, "model");
    need(data, "data");
    need(out, "out");
    ild::require(data->dim == model->model.dim(), ild::ErrorCode::DimensionMismatch,
                 "dataset dimension differs from the model");
    *out = ild::mean_nll(model->model, data->samples);
  });
}

}  // extern "C"
