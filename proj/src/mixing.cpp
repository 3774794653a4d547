#include "ild/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ild/error.hpp"

namespace ild {

namespace {

constexpr double kMinAbsDet = 1e-12;
constexpr int kPowerIterations = 200;
constexpr double kPowerTolerance = 1e-10;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_length(const Vec& v, int dim, const char* what) {
  if (v.size() != dim) {
    std::ostringstream msg;
    msg << what << ": expected length " << dim << ", got " << v.size();
    fail(ErrorCode::DimensionMismatch, msg.str());
  }
}

Vec leaky_forward(double slope, const Vec& x) {
  Vec y = x;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] < 0.0) y[i] *= slope;
  }
  return y;
}

Vec leaky_inverse(double slope, const Vec& y) {
  Vec x = y;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < 0.0) x[i] /= slope;
  }
  return x;
}

double leaky_log_abs_det(double slope, const Vec& x) {
  const auto negatives = (x.array() < 0.0).count();
  return negatives == 0 ? 0.0 : static_cast<double>(negatives) * std::log(slope);
}

}  // namespace

AffineDense::AffineDense(Mat G, Vec b) : G_(std::move(G)), b_(std::move(b)) {
  require(G_.rows() == G_.cols() && G_.rows() == b_.size() && b_.size() > 0,
          ErrorCode::DimensionMismatch, "AffineDense: G must be square and match b");
  lu_.compute(G_);
  const double det = lu_.determinant();
  if (!(std::abs(det) > kMinAbsDet)) {
    std::ostringstream msg;
    msg << "AffineDense: |det G| = " << std::abs(det) << " is not above " << kMinAbsDet;
    fail(ErrorCode::SingularMatrix, msg.str());
  }
  // Sum of logs of the U diagonal avoids overflow of the raw determinant.
  log_abs_det_ = lu_.matrixLU().diagonal().cwiseAbs().array().log().sum();
}

LeakyRelu::LeakyRelu(double slope) : slope_(slope) {
  require(slope > 0.0 && slope <= 1.0, ErrorCode::InvalidArgument,
          "LeakyRelu: slope must lie in (0, 1]");
}

Permute::Permute(std::vector<int> perm) : perm_(std::move(perm)) {
  std::vector<int> sorted = perm_;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    require(sorted[i] == static_cast<int>(i), ErrorCode::InvalidArgument,
            "Permute: not a bijection");
  }
  require(!perm_.empty(), ErrorCode::DimensionMismatch, "Permute: empty permutation");
}

Permute Permute::swap(int dim, int j, int j_prime) {
  require(j >= 1 && j <= dim && j_prime >= 1 && j_prime <= dim, ErrorCode::InvalidArgument,
          "Permute::swap: index out of range");
  std::vector<int> perm(dim);
  for (int i = 0; i < dim; ++i) perm[i] = i;
  std::swap(perm[j - 1], perm[j_prime - 1]);
  return Permute(std::move(perm));
}

int layer_dim(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const AffineDense& l) { return l.dim(); },
                        [](const LeakyRelu&) { return -1; },
                        [](const Permute& l) { return l.dim(); },
                        [](const Triangular& l) { return l.scm.dim(); },
                    },
                    layer);
}

LayerChain::LayerChain(int dim, std::vector<Layer> layers) : dim_(dim), layers_(std::move(layers)) {
  require(dim > 0, ErrorCode::DimensionMismatch, "LayerChain: dimension must be positive");
  for (const auto& layer : layers_) {
    const int d = layer_dim(layer);
    require(d < 0 || d == dim_, ErrorCode::DimensionMismatch,
            "LayerChain: layer dimension differs from chain dimension");
  }
}

Vec chain_forward(const LayerChain& chain, const Vec& x) {
  check_length(x, chain.dim(), "chain_forward");
  Vec v = x;
  for (const auto& layer : chain.layers()) {
    v = std::visit(Overloaded{
                       [&](const AffineDense& l) -> Vec { return l.apply(v); },
                       [&](const LeakyRelu& l) -> Vec { return leaky_forward(l.slope(), v); },
                       [&](const Permute& l) -> Vec {
                         Vec out(v.size());
                         for (int i = 0; i < l.dim(); ++i) out[i] = v[l.perm()[i]];
                         return out;
                       },
                       [&](const Triangular& l) -> Vec { return scm_forward(l.scm, v); },
                   },
                   layer);
  }
  return v;
}

InversePass chain_inverse_pass(const LayerChain& chain, const Vec& y) {
  check_length(y, chain.dim(), "chain_inverse");
  Vec v = y;
  double log_det = 0.0;
  for (auto it = chain.layers().rbegin(); it != chain.layers().rend(); ++it) {
    std::visit(Overloaded{
                   [&](const AffineDense& l) {
                     v = l.solve(v);
                     log_det -= l.log_abs_det();
                   },
                   [&](const LeakyRelu& l) {
                     v = leaky_inverse(l.slope(), v);
                     log_det -= leaky_log_abs_det(l.slope(), v);
                   },
                   [&](const Permute& l) {
                     Vec out(v.size());
                     for (int i = 0; i < l.dim(); ++i) out[l.perm()[i]] = v[i];
                     v = std::move(out);
                   },
                   [&](const Triangular& l) {
                     v = scm_inverse(l.scm, v);
                     log_det -= scm_log_abs_det(l.scm);
                   },
               },
               *it);
  }
  return {std::move(v), log_det};
}

Vec chain_inverse(const LayerChain& chain, const Vec& y) { return chain_inverse_pass(chain, y).x; }

double chain_log_abs_det(const LayerChain& chain, const Vec& x) {
  check_length(x, chain.dim(), "chain_log_abs_det");
  Vec v = x;
  double log_det = 0.0;
  for (const auto& layer : chain.layers()) {
    std::visit(Overloaded{
                   [&](const AffineDense& l) {
                     log_det += l.log_abs_det();
                     v = l.apply(v);
                   },
                   [&](const LeakyRelu& l) {
                     log_det += leaky_log_abs_det(l.slope(), v);
                     v = leaky_forward(l.slope(), v);
                   },
                   [&](const Permute& l) {
                     Vec out(v.size());
                     for (int i = 0; i < l.dim(); ++i) out[i] = v[l.perm()[i]];
                     v = std::move(out);
                   },
                   [&](const Triangular& l) {
                     log_det += scm_log_abs_det(l.scm);
                     v = scm_forward(l.scm, v);
                   },
               },
               layer);
  }
  return log_det;
}

LayerChain chain_append(const LayerChain& chain, Layer layer) {
  std::vector<Layer> layers = chain.layers();
  layers.push_back(std::move(layer));
  return LayerChain(chain.dim(), std::move(layers));
}

LayerChain chain_append_right(const LayerChain& chain, Layer layer) {
  std::vector<Layer> layers;
  layers.reserve(chain.layers().size() + 1);
  layers.push_back(std::move(layer));
  layers.insert(layers.end(), chain.layers().begin(), chain.layers().end());
  return LayerChain(chain.dim(), std::move(layers));
}

double power_iteration_norm(const Mat& A) {
  const Mat gram = A.transpose() * A;
  Vec v = Vec::Ones(A.cols()).normalized();
  double estimate = 0.0;
  for (int it = 0; it < kPowerIterations; ++it) {
    Vec w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = std::sqrt(norm);
    const bool converged = std::abs(next - estimate) <= kPowerTolerance * next;
    estimate = next;
    if (converged) break;
  }
  return estimate;
}

namespace {

// Power iteration approaches the top singular value from below, so the
// estimate is certified against the SVD and the larger value is kept.
double spectral_norm_bound(const Mat& A) {
  const double power = power_iteration_norm(A);
  const double svd = Eigen::JacobiSVD<Mat>(A).singularValues()(0);
  return std::max(power, svd);
}

}  // namespace

double lipschitz_upper_bound(const LayerChain& chain) {
  double bound = 1.0;
  for (const auto& layer : chain.layers()) {
    bound *= std::visit(Overloaded{
                            [](const AffineDense& l) { return spectral_norm_bound(l.G()); },
                            [](const LeakyRelu& l) { return std::max(1.0, l.slope()); },
                            [](const Permute&) { return 1.0; },
                            [](const Triangular& l) { return spectral_norm_bound(l.scm.matrix()); },
                        },
                        layer);
  }
  return bound;
}

}  // namespace ild
