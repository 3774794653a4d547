#include "ild/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ild/error.hpp"

namespace ild::io {

namespace {

template <class F>
auto parse_guard(const char* what, F&& body) {
  try {
    return body();
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

json vec_to_json(const Vec& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

Vec vec_from_json(const json& j, int expected, const char* what) {
  if (!j.is_array()) fail(ErrorCode::Parse, std::string(what) + ": expected an array");
  if (expected >= 0 && static_cast<int>(j.size()) != expected) {
    fail(ErrorCode::DimensionMismatch, std::string(what) + ": wrong length");
  }
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json layer_to_json(const Layer& layer) {
  if (const auto* a = std::get_if<AffineDense>(&layer)) {
    json rows = json::array();
    for (int r = 0; r < a->dim(); ++r) rows.push_back(vec_to_json(a->G().row(r).transpose()));
    return {{"kind", "affine"}, {"G", rows}, {"b", vec_to_json(a->b())}};
  }
  if (const auto* l = std::get_if<LeakyRelu>(&layer)) {
    return {{"kind", "leaky_relu"}, {"slope", l->slope()}};
  }
  if (const auto* p = std::get_if<Permute>(&layer)) {
    json perm = json::array();
    for (int v : p->perm()) perm.push_back(v + 1);
    return {{"kind", "permute"}, {"perm", perm}};
  }
  const auto& t = std::get<Triangular>(layer);
  return {{"kind", "triangular"}, {"scm", to_json(t.scm)}};
}

Layer layer_from_json(const json& j, int dim) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "affine") {
    const json& rows = j.at("G");
    if (!rows.is_array() || static_cast<int>(rows.size()) != dim) {
      fail(ErrorCode::DimensionMismatch, "affine layer: G must have dim rows");
    }
    Mat G(dim, dim);
    for (int r = 0; r < dim; ++r) G.row(r) = vec_from_json(rows[r], dim, "affine layer row").transpose();
    return AffineDense(std::move(G), vec_from_json(j.at("b"), dim, "affine layer b"));
  }
  if (kind == "leaky_relu") return LeakyRelu(j.at("slope").get<double>());
  if (kind == "permute") {
    std::vector<int> perm;
    for (const auto& v : j.at("perm")) perm.push_back(v.get<int>() - 1);
    if (static_cast<int>(perm.size()) != dim) {
      fail(ErrorCode::DimensionMismatch, "permute layer: wrong length");
    }
    return Permute(std::move(perm));
  }
  if (kind == "triangular") return Triangular{scm_from_json(j.at("scm"))};
  fail(ErrorCode::Parse, "unknown layer kind '" + kind + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

json to_json(const AffineSCM& scm) {
  json lower = json::array();
  for (int i = 0; i < scm.dim(); ++i) {
    for (int j = 0; j < i; ++j) lower.push_back(scm.L()(i, j));
  }
  return {{"dim", scm.dim()}, {"L", lower}, {"S", vec_to_json(scm.S())}, {"b", vec_to_json(scm.b())}};
}

AffineSCM scm_from_json(const json& j) {
  return parse_guard("scm", [&] {
    const int m = j.at("dim").get<int>();
    if (m <= 0) fail(ErrorCode::Parse, "scm: dim must be positive");
    const Vec lower = vec_from_json(j.at("L"), m * (m - 1) / 2, "scm L");
    Mat L = Mat::Zero(m, m);
    int k = 0;
    for (int i = 0; i < m; ++i) {
      for (int c = 0; c < i; ++c) L(i, c) = lower[k++];
    }
    return AffineSCM(std::move(L), vec_from_json(j.at("S"), m, "scm S"),
                     vec_from_json(j.at("b"), m, "scm b"));
  });
}

json to_json(const LayerChain& chain) {
  json layers = json::array();
  for (const auto& layer : chain.layers()) layers.push_back(layer_to_json(layer));
  return {{"dim", chain.dim()}, {"layers", layers}};
}

LayerChain chain_from_json(const json& j) {
  return parse_guard("chain", [&] {
    const int m = j.at("dim").get<int>();
    std::vector<Layer> layers;
    for (const auto& l : j.at("layers")) layers.push_back(layer_from_json(l, m));
    return LayerChain(m, std::move(layers));
  });
}

json to_json(const ILDModel& model) {
  json scms = json::array();
  for (const auto& f : model.scms()) scms.push_back(to_json(f));
  return {{"g", to_json(model.g())}, {"F", scms}};
}

ILDModel model_from_json(const json& j) {
  return parse_guard("model", [&] {
    LayerChain g = chain_from_json(j.at("g"));
    std::vector<AffineSCM> scms;
    for (const auto& f : j.at("F")) scms.push_back(scm_from_json(f));
    return ILDModel(std::move(g), std::move(scms));
  });
}

json to_json(const GroundTruthSpec& spec) {
  return {{"dim", spec.dim},         {"num_domains", spec.num_domains},
          {"intervention", spec.intervention}, {"n_train", spec.n_train},
          {"n_val", spec.n_val},     {"n_test", spec.n_test},
          {"seed", spec.seed}};
}

GroundTruthSpec spec_from_json(const json& j) {
  return parse_guard("ground-truth spec", [&] {
    if (!j.is_object()) fail(ErrorCode::Parse, "ground-truth spec: expected an object");
    GroundTruthSpec spec;
    spec.dim = j.value("dim", spec.dim);
    spec.num_domains = j.value("num_domains", spec.num_domains);
    spec.intervention = j.value("intervention", spec.intervention);
    spec.n_train = j.value("n_train", spec.n_train);
    spec.n_val = j.value("n_val", spec.n_val);
    spec.n_test = j.value("n_test", spec.n_test);
    spec.seed = j.value("seed", spec.seed);
    spec.validate();
    return spec;
  });
}

json to_json(const TrainConfig& c) {
  return {{"learning_rate_g", c.learning_rate_g}, {"learning_rate_f", c.learning_rate_f},
          {"beta1", c.beta1},                     {"beta2", c.beta2},
          {"batch_size", c.batch_size},           {"iterations", c.iterations},
          {"eval_every", c.eval_every},           {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  return parse_guard("train config", [&] {
    if (!j.is_object()) fail(ErrorCode::Parse, "train config: expected an object");
    TrainConfig c;
    c.learning_rate_g = j.value("learning_rate_g", c.learning_rate_g);
    c.learning_rate_f = j.value("learning_rate_f", c.learning_rate_f);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.iterations = j.value("iterations", c.iterations);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  });
}

json to_json(const ModelVariant& v) {
  if (v.kind == ModelVariant::Kind::Dense) return {{"variant", "dense"}};
  return {{"variant", "can"}, {"k", v.k}};
}

ModelVariant variant_from_json(const json& j) {
  return parse_guard("model variant", [&] {
    const std::string name = j.at("variant").get<std::string>();
    if (name == "dense") return ModelVariant::dense();
    if (name == "can") return ModelVariant::can(j.at("k").get<int>());
    fail(ErrorCode::Parse, "model variant must be 'can' or 'dense', got '" + name + "'");
  });
}

json to_json(const InterventionSet& set) {
  return {{"indices", set.indices}, {"tolerance", set.tolerance}};
}

json to_json(const CanonicalizationReport& report) {
  json swaps = json::array();
  for (const auto& [j, jp] : report.swaps) swaps.push_back({j, jp});
  return {{"original_intervention", to_json(report.original_intervention)},
          {"final_intervention", to_json(report.final_intervention)},
          {"swaps", swaps},
          {"steps", report.steps}};
}

json to_json(const AdamState& state) {
  return {{"t", state.t},
          {"theta", vec_to_json(state.theta)},
          {"m", vec_to_json(state.m)},
          {"v", vec_to_json(state.v)}};
}

std::string samples_to_csv(std::span<const DomainSample> samples, int dim) {
  std::string out = "d";
  for (int i = 1; i <= dim; ++i) out += ",x" + std::to_string(i);
  out += '\n';
  for (const auto& s : samples) {
    require(s.x.size() == dim, ErrorCode::DimensionMismatch, "samples_to_csv: dimension mismatch");
    out += std::to_string(s.d);
    for (double v : s.x) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

Samples samples_from_csv(std::string_view text) {
  auto next_line = [&](std::string_view& rest) {
    const auto pos = rest.find('\n');
    std::string_view line = rest.substr(0, pos);
    rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };
  std::string_view rest = text;
  const std::string_view header = next_line(rest);
  if (header.substr(0, 2) != "d," && header != "d") {
    fail(ErrorCode::Parse, "dataset CSV: header must start with 'd'");
  }
  const int dim = static_cast<int>(std::count(header.begin(), header.end(), ','));
  Samples out;
  int line_no = 1;
  while (!rest.empty()) {
    const std::string_view line = next_line(rest);
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(fields.size()) != dim + 1) {
      fail(ErrorCode::DimensionMismatch,
           "dataset CSV line " + std::to_string(line_no) + ": wrong number of fields");
    }
    DomainSample s;
    s.x.resize(dim);
    auto bad = [&] {
      fail(ErrorCode::Parse, "dataset CSV line " + std::to_string(line_no) + ": bad number");
    };
    auto [p, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), s.d);
    if (ec != std::errc{} || p != fields[0].data() + fields[0].size()) bad();
    for (int i = 0; i < dim; ++i) {
      const auto& f = fields[i + 1];
      auto [q, ec2] = std::from_chars(f.data(), f.data() + f.size(), s.x[i]);
      if (ec2 != std::errc{} || q != f.data() + f.size()) bad();
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string history_to_csv(std::span<const HistoryRecord> history) {
  std::string out = "iteration,train_nll,val_nll\n";
  for (const auto& h : history) {
    out += std::to_string(h.iteration) + ',' + format_double(h.train_nll) + ',' +
           format_double(h.val_nll) + '\n';
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace ild::io
