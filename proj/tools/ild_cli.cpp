// Command-line front end over the C interface.
//
//   ild generate       --config C [--seed S] [--out DIR]
//   ild train          --config C [--seed S] [--out DIR] [--data DIR]
//   ild eval           --model M (--data DIR | --ground-truth GT --test T [--val V]) [--out FILE]
//   ild canonicalize   --model M [--tol T] [--out DIR]
//   ild counterfactual --model M --input CSV --to D [--out FILE]
//   ild experiment     --config C [--seed S] [--out DIR]
//
// Exit codes: 0 ok, 1 internal, 2 config, 3 missing input, 4 shape/validation.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ild/ild.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitValidation = 4;
constexpr int kBoundSamples = 10000;
constexpr std::uint64_t kBoundSeed = 0;

struct CliError {
  int exit_code;
  std::string message;
};

[[noreturn]] void die(int code, const std::string& msg) { throw CliError{code, msg}; }

int exit_code_for(ild_status s) {
  switch (s) {
    case ILD_OK: return 0;
    case ILD_ERR_IO: return kExitMissing;
    case ILD_ERR_PARSE:
    case ILD_ERR_INVALID_ARGUMENT: return kExitConfig;
    case ILD_ERR_INTERNAL: return kExitInternal;
    default: return kExitValidation;
  }
}

void check(ild_status s, const std::string& context) {
  if (s != ILD_OK) die(exit_code_for(s), context + ": " + ild_last_error());
}

void check_as(ild_status s, int code, const std::string& context) {
  if (s != ILD_OK) die(code, context + ": " + ild_last_error());
}

struct ModelDeleter {
  void operator()(ild_model* m) const { ild_model_free(m); }
};
struct DatasetDeleter {
  void operator()(ild_dataset* d) const { ild_dataset_free(d); }
};
struct StringDeleter {
  void operator()(char* s) const { ild_string_free(s); }
};
using Model = std::unique_ptr<ild_model, ModelDeleter>;
using Dataset = std::unique_ptr<ild_dataset, DatasetDeleter>;
using String = std::unique_ptr<char, StringDeleter>;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(kExitMissing, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) die(kExitInternal, "cannot write " + path.string());
  out << text;
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) die(kExitMissing, std::string(what) + " not found: " + path.string());
}

json load_config(const std::string& path) {
  if (path.empty()) die(kExitConfig, "--config is required");
  require_file(path, "config");
  try {
    json config = json::parse(read_text(path));
    if (!config.is_object()) die(kExitConfig, "config must be a JSON object");
    return config;
  } catch (const json::exception& e) {
    die(kExitConfig, "malformed config " + path + ": " + e.what());
  }
}

fs::path output_dir(const json& config, const std::string& out_flag) {
  fs::path dir = !out_flag.empty() ? fs::path(out_flag)
                                   : fs::path(config.value("output_dir", std::string(".")));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) die(kExitInternal, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

json section(const json& config, const char* key) {
  if (!config.contains(key)) return json::object();
  if (!config.at(key).is_object()) die(kExitConfig, std::string("config.") + key + " must be an object");
  return config.at(key);
}

std::string take_string(char* raw) {
  String owned(raw);
  return owned ? std::string(owned.get()) : std::string();
}

json normalized_spec(json spec) {
  char* out = nullptr;
  check_as(ild_spec_normalize(spec.dump().c_str(), &out), kExitConfig, "config.ground_truth");
  return json::parse(take_string(out));
}

json normalized_train(json train) {
  char* out = nullptr;
  check_as(ild_train_config_normalize(train.dump().c_str(), &out), kExitConfig, "config.train");
  return json::parse(take_string(out));
}

json model_variant(const json& config, const json& spec) {
  json variant = section(config, "model");
  if (!variant.contains("variant")) variant["variant"] = "can";
  if (variant["variant"] == "can" && !variant.contains("k")) {
    variant["k"] = spec.contains("intervention") ? spec["intervention"].size() : 0;
  }
  if (variant["variant"] != "can" && variant["variant"] != "dense") {
    die(kExitConfig, "config.model.variant must be \"can\" or \"dense\"");
  }
  if (variant["variant"] == "can" && spec.contains("dim")) {
    const int k = variant["k"].get<int>();
    if (k < 0 || k > spec["dim"].get<int>()) die(kExitConfig, "config.model.k must be in [0, dim]");
  }
  return variant;
}

Model load_model(const fs::path& path) {
  require_file(path, "model");
  ild_model* raw = nullptr;
  check(ild_model_load(path.string().c_str(), &raw), "loading " + path.string());
  return Model(raw);
}

Dataset load_dataset(const fs::path& path) {
  require_file(path, "dataset");
  ild_dataset* raw = nullptr;
  const ild_status s = ild_dataset_load_csv(path.string().c_str(), &raw);
  if (s == ILD_ERR_PARSE) die(kExitValidation, "loading " + path.string() + ": " + ild_last_error());
  check(s, "loading " + path.string());
  return Dataset(raw);
}

void save_model(const ild_model* model, const fs::path& path) {
  check_as(ild_model_save(model, path.string().c_str()), kExitInternal, "writing " + path.string());
}

void save_dataset(const ild_dataset* data, const fs::path& path) {
  check_as(ild_dataset_save_csv(data, path.string().c_str()), kExitInternal,
           "writing " + path.string());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- generate ------------------------------------------------------------

struct Generated {
  Model gt;
  Dataset train, val, test;
};

Generated generate(const json& spec) {
  ild_model* gt = nullptr;
  ild_dataset* tr = nullptr;
  ild_dataset* va = nullptr;
  ild_dataset* te = nullptr;
  check(ild_generate(spec.dump().c_str(), &gt, &tr, &va, &te), "generate");
  return {Model(gt), Dataset(tr), Dataset(va), Dataset(te)};
}

int cmd_generate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_flag) {
  const json config = load_config(config_path);
  json spec = section(config, "ground_truth");
  if (seed) spec["seed"] = *seed;
  spec = normalized_spec(spec);
  const fs::path dir = output_dir(config, out_flag);
  Generated g = generate(spec);
  save_dataset(g.train.get(), dir / "train.csv");
  save_dataset(g.val.get(), dir / "val.csv");
  save_dataset(g.test.get(), dir / "test.csv");
  write_text(dir / "spec.json", dump(spec));
  save_model(g.gt.get(), dir / "ground_truth.json");
  std::cout << "wrote dataset and ground truth to " << dir.string() << "\n";
  return 0;
}

// ---- train ---------------------------------------------------------------

struct Trained {
  Model best;
  std::string history_csv;
  std::string optimizer_json;
};

Trained train_model(const json& variant, const json& train_config, const ild_dataset* train,
                    const ild_dataset* val, int num_domains) {
  ild_model* best = nullptr;
  char* history = nullptr;
  char* optimizer = nullptr;
  check(ild_train(variant.dump().c_str(), train_config.dump().c_str(), train, val, num_domains,
                  &best, &history, &optimizer),
        "train");
  return {Model(best), take_string(history), take_string(optimizer)};
}

int infer_num_domains(const fs::path& data_dir, const ild_dataset* train) {
  if (fs::is_regular_file(data_dir / "spec.json")) {
    try {
      return json::parse(read_text(data_dir / "spec.json")).at("num_domains").get<int>();
    } catch (const json::exception& e) {
      die(kExitValidation, "bad spec.json in " + data_dir.string() + ": " + e.what());
    }
  }
  int max_d = 0;
  for (std::size_t i = 0; i < ild_dataset_size(train); ++i) {
    int d = 0;
    check(ild_dataset_get(train, i, &d, nullptr), "reading train split");
    max_d = std::max(max_d, d);
  }
  return max_d;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_flag, const std::string& data_flag) {
  const json config = load_config(config_path);
  json train_config = section(config, "train");
  if (seed) train_config["seed"] = *seed;
  train_config = normalized_train(train_config);
  const fs::path data_dir =
      !data_flag.empty() ? fs::path(data_flag) : fs::path(config.value("data_dir", std::string(".")));
  if (!fs::is_directory(data_dir)) die(kExitMissing, "data directory not found: " + data_dir.string());
  Dataset train = load_dataset(data_dir / "train.csv");
  Dataset val = load_dataset(data_dir / "val.csv");
  json spec_hint = json::object();
  spec_hint["dim"] = ild_dataset_dim(train.get());
  if (fs::is_regular_file(data_dir / "spec.json")) {
    try {
      spec_hint["intervention"] = json::parse(read_text(data_dir / "spec.json")).at("intervention");
    } catch (const json::exception&) {
    }
  }
  const json variant = model_variant(config, spec_hint);
  const int num_domains = infer_num_domains(data_dir, train.get());
  const fs::path dir = output_dir(config, out_flag);
  Trained t = train_model(variant, train_config, train.get(), val.get(), num_domains);
  save_model(t.best.get(), dir / "model.json");
  write_text(dir / "optimizer_state.json", t.optimizer_json + "\n");
  write_text(dir / "history.csv", t.history_csv);
  std::cout << "wrote model.json, optimizer_state.json, history.csv to " << dir.string() << "\n";
  return 0;
}

// ---- eval ----------------------------------------------------------------

double dataset_nll(const ild_model* model, const ild_dataset* data, const char* what) {
  double out = 0.0;
  check(ild_dataset_nll(model, data, &out), std::string("NLL on ") + what);
  return out;
}

json null_if_nan(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json evaluate(const ild_model* model, const ild_model* gt, const ild_dataset* test,
              const ild_dataset* val) {
  if (ild_model_dim(model) != ild_model_dim(gt) ||
      ild_model_num_domains(model) != ild_model_num_domains(gt)) {
    die(kExitValidation, "model and ground truth differ in shape");
  }
  json metrics;
  double cf = 0.0;
  check(ild_counterfactual_error(model, gt, test, &cf), "counterfactual error");
  metrics["cf_error"] = cf;
  metrics["test_nll"] = dataset_nll(model, test, "test split");
  metrics["val_nll"] = val ? null_if_nan(dataset_nll(model, val, "validation split")) : json(nullptr);
  char* set = nullptr;
  check(ild_intervention_set(model, 1e-8, &set), "intervention set");
  metrics["intervention_set"] = json::parse(take_string(set))["indices"];
  double lip = 0.0;
  check(ild_lipschitz_bound(model, &lip), "Lipschitz bound");
  metrics["lipschitz_bound"] = lip;
  double bound = 0.0;
  check(ild_gt_bound_term(gt, kBoundSamples, kBoundSeed, &bound), "ground-truth bound term");
  metrics["gt_bound_term"] = bound;
  return metrics;
}

int cmd_eval(const std::string& model_path, const std::string& data_flag, std::string gt_path,
             std::string test_path, std::string val_path, const std::string& out_file) {
  if (model_path.empty()) die(kExitConfig, "--model is required");
  if (!data_flag.empty()) {
    const fs::path dir(data_flag);
    if (gt_path.empty()) gt_path = (dir / "ground_truth.json").string();
    if (test_path.empty()) test_path = (dir / "test.csv").string();
    if (val_path.empty()) val_path = (dir / "val.csv").string();
  }
  if (gt_path.empty() || test_path.empty()) {
    die(kExitConfig, "need --ground-truth and --test, or --data");
  }
  Model model = load_model(model_path);
  Model gt = load_model(gt_path);
  Dataset test = load_dataset(test_path);
  Dataset val = val_path.empty() ? Dataset() : load_dataset(val_path);
  const json metrics = evaluate(model.get(), gt.get(), test.get(), val.get());
  if (out_file.empty()) {
    std::cout << dump(metrics);
  } else {
    write_text(out_file, dump(metrics));
  }
  return 0;
}

// ---- canonicalize --------------------------------------------------------

int cmd_canonicalize(const std::string& model_path, double tol, const std::string& out_flag) {
  if (model_path.empty()) die(kExitConfig, "--model is required");
  Model model = load_model(model_path);
  ild_model* canonical = nullptr;
  ild_model* identity = nullptr;
  char* report = nullptr;
  check(ild_canonicalize(model.get(), tol, &canonical, &identity, &report), "canonicalize");
  Model c(canonical);
  Model ic(identity);
  const std::string report_text = take_string(report);
  const fs::path dir = out_flag.empty() ? fs::path(".") : fs::path(out_flag);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) die(kExitInternal, "cannot create " + dir.string());
  save_model(c.get(), dir / "canonical.json");
  save_model(ic.get(), dir / "identity_canonical.json");
  write_text(dir / "report.json", report_text + "\n");
  std::cout << report_text << "\n";
  return 0;
}

// ---- counterfactual ------------------------------------------------------

int cmd_counterfactual(const std::string& model_path, const std::string& input, int to,
                       const std::string& out_file) {
  if (model_path.empty() || input.empty()) die(kExitConfig, "--model and --input are required");
  Model model = load_model(model_path);
  Dataset data = load_dataset(input);
  const int m = ild_model_dim(model.get());
  if (ild_dataset_dim(data.get()) != m) die(kExitValidation, "input dimension differs from the model");
  const std::size_t n = ild_dataset_size(data.get());
  std::vector<int> labels(n, to);
  std::vector<double> x(n * m);
  std::vector<double> row(m);
  for (std::size_t i = 0; i < n; ++i) {
    int d = 0;
    check(ild_dataset_get(data.get(), i, &d, row.data()), "reading input");
    check(ild_counterfactual(model.get(), row.data(), d, to, x.data() + i * m),
          "counterfactual for row " + std::to_string(i + 1));
  }
  ild_dataset* raw = nullptr;
  check(ild_dataset_create(m, n, labels.data(), x.data(), &raw), "building output");
  Dataset out(raw);
  if (out_file.empty()) {
    char* csv = nullptr;
    check(ild_dataset_to_csv(out.get(), &csv), "formatting output");
    std::cout << take_string(csv);
  } else {
    save_dataset(out.get(), out_file);
  }
  return 0;
}

// ---- experiment ----------------------------------------------------------

struct Row {
  std::uint64_t seed;
  std::string variant;
  int k;
  double cf_error, val_nll, test_nll;
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::pair<double, double> mean_se(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

int cmd_experiment(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
                   const std::string& out_flag) {
  const json config = load_config(config_path);
  json spec = normalized_spec(section(config, "ground_truth"));
  const json train_base = normalized_train(section(config, "train"));
  const int n_seeds = config.value("n_seeds", 1);
  if (n_seeds < 1) die(kExitConfig, "n_seeds must be at least 1");
  std::vector<json> variants;
  if (config.contains("variants")) {
    for (const auto& v : config.at("variants")) variants.push_back(model_variant({{"model", v}}, spec));
  } else {
    variants.push_back(model_variant(config, spec));
    if (variants.front()["variant"] != "dense") variants.push_back({{"variant", "dense"}});
  }
  const std::uint64_t base_seed = seed_flag ? *seed_flag : spec["seed"].get<std::uint64_t>();
  const fs::path dir = output_dir(config, out_flag);
  const int m = spec["dim"].get<int>();

  std::vector<Row> rows;
  for (int i = 0; i < n_seeds; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    try {
      json s = spec;
      s["seed"] = seed;
      Generated g = generate(s);
      json tc = train_base;
      tc["seed"] = tc["seed"].get<std::uint64_t>() + static_cast<std::uint64_t>(i);
      for (const auto& v : variants) {
        Trained t = train_model(v, tc, g.train.get(), g.val.get(), s["num_domains"].get<int>());
        double cf = 0.0;
        check(ild_counterfactual_error(t.best.get(), g.gt.get(), g.test.get(), &cf), "cf error");
        const std::string name = v["variant"].get<std::string>();
        const int k = name == "dense" ? m : v["k"].get<int>();
        rows.push_back({seed, name, k, cf, dataset_nll(t.best.get(), g.val.get(), "validation split"),
                        dataset_nll(t.best.get(), g.test.get(), "test split")});
        std::cerr << "seed " << seed << " " << name << " k=" << k << " cf_error=" << cf << "\n";
      }
    } catch (const CliError& e) {
      die(e.exit_code, "seed " + std::to_string(seed) + ": " + e.message);
    }
  }

  std::string results = "seed,variant,k,cf_error,val_nll,test_nll\n";
  for (const auto& r : rows) {
    results += std::to_string(r.seed) + "," + r.variant + "," + std::to_string(r.k) + "," +
               fmt(r.cf_error) + "," + fmt(r.val_nll) + "," + fmt(r.test_nll) + "\n";
  }
  write_text(dir / "results.csv", results);

  std::string summary =
      "variant,k,n_seeds,cf_error_mean,cf_error_se,val_nll_mean,val_nll_se,test_nll_mean,test_nll_se\n";
  for (const auto& v : variants) {
    const std::string name = v["variant"].get<std::string>();
    const int k = name == "dense" ? m : v["k"].get<int>();
    std::vector<double> cf, val, test;
    for (const auto& r : rows) {
      if (r.variant == name && r.k == k) {
        cf.push_back(r.cf_error);
        val.push_back(r.val_nll);
        test.push_back(r.test_nll);
      }
    }
    const auto [cf_m, cf_se] = mean_se(cf);
    const auto [val_m, val_se] = mean_se(val);
    const auto [test_m, test_se] = mean_se(test);
    summary += name + "," + std::to_string(k) + "," + std::to_string(cf.size()) + "," + fmt(cf_m) +
               "," + fmt(cf_se) + "," + fmt(val_m) + "," + fmt(val_se) + "," + fmt(test_m) + "," +
               fmt(test_se) + "\n";
  }
  write_text(dir / "summary.csv", summary);
  std::cout << summary;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invertible latent domain causal models"};
  app.require_subcommand(1);

  std::string config, out, data, model, gt, test, val, input;
  std::uint64_t seed_value = 0;
  double tol = 1e-8;
  int to = 1;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--seed", seed_value, "Seed override");
    sub->add_option("--out", out, "Output directory");
  };

  auto* generate_cmd = app.add_subcommand("generate", "Sample a ground-truth ILD and its dataset");
  add_config(generate_cmd);
  auto* train_cmd = app.add_subcommand("train", "Fit an ILD by maximum likelihood");
  add_config(train_cmd);
  train_cmd->add_option("--data", data, "Dataset directory (overrides config data_dir)");
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model against the ground truth");
  eval_cmd->add_option("--model", model)->required();
  eval_cmd->add_option("--data", data, "Directory holding ground_truth.json, val.csv, test.csv");
  eval_cmd->add_option("--ground-truth", gt);
  eval_cmd->add_option("--test", test);
  eval_cmd->add_option("--val", val);
  eval_cmd->add_option("--out", out, "Metrics JSON file (default stdout)");
  auto* canon_cmd = app.add_subcommand("canonicalize", "Canonicalize an ILD");
  canon_cmd->add_option("--model", model)->required();
  canon_cmd->add_option("--tol", tol, "Intervention tolerance");
  canon_cmd->add_option("--out", out, "Output directory");
  auto* cf_cmd = app.add_subcommand("counterfactual", "Map samples to another domain");
  cf_cmd->add_option("--model", model)->required();
  cf_cmd->add_option("--input", input, "Dataset CSV")->required();
  cf_cmd->add_option("--to", to, "Target domain (1-based)")->required();
  cf_cmd->add_option("--out", out, "Output CSV (default stdout)");
  auto* exp_cmd = app.add_subcommand("experiment", "Run the Can versus Dense comparison");
  add_config(exp_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  auto seed_override = [&](CLI::App* sub) -> std::optional<std::uint64_t> {
    if (sub->count("--seed") > 0) return seed_value;
    return std::nullopt;
  };

  try {
    if (*generate_cmd) return cmd_generate(config, seed_override(generate_cmd), out);
    if (*train_cmd) return cmd_train(config, seed_override(train_cmd), out, data);
    if (*eval_cmd) return cmd_eval(model, data, gt, test, val, out);
    if (*canon_cmd) return cmd_canonicalize(model, tol, out);
    if (*cf_cmd) return cmd_counterfactual(model, input, to, out);
    if (*exp_cmd) return cmd_experiment(config, seed_override(exp_cmd), out);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.exit_code;
  } catch (const json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
