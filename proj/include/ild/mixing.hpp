#pragma once

#include <variant>
#include <vector>

#include "ild/scm.hpp"
#include "ild/types.hpp"

namespace ild {

/// y = G x + b with G invertible. The LU factorization is computed once.
class AffineDense {
 public:
  /// Throws SingularMatrix when |det G| <= 1e-12.
  AffineDense(Mat G, Vec b);

  int dim() const { return static_cast<int>(b_.size()); }
  const Mat& G() const { return G_; }
  const Vec& b() const { return b_; }
  double log_abs_det() const { return log_abs_det_; }
  double det() const { return lu_.determinant(); }

  Vec apply(const Vec& x) const { return G_ * x + b_; }
  Vec solve(const Vec& y) const { return lu_.solve(y - b_); }

 private:
  Mat G_;
  Vec b_;
  Eigen::PartialPivLU<Mat> lu_;
  double log_abs_det_;
};

/// Elementwise v -> v for v >= 0, slope * v otherwise.
class LeakyRelu {
 public:
  explicit LeakyRelu(double slope);
  double slope() const { return slope_; }

 private:
  double slope_;
};

/// y[i] = x[perm[i]] (0-based storage).
class Permute {
 public:
  explicit Permute(std::vector<int> perm);
  /// Transposition of the 1-based coordinates j and j_prime.
  static Permute swap(int dim, int j, int j_prime);

  int dim() const { return static_cast<int>(perm_.size()); }
  const std::vector<int>& perm() const { return perm_; }

 private:
  std::vector<int> perm_;
};

struct Triangular {
  AffineSCM scm;
};

using Layer = std::variant<AffineDense, LeakyRelu, Permute, Triangular>;

/// The shared mixing function g as layers applied first-to-last.
class LayerChain {
 public:
  explicit LayerChain(int dim) : dim_(dim) {}
  LayerChain(int dim, std::vector<Layer> layers);

  int dim() const { return dim_; }
  const std::vector<Layer>& layers() const { return layers_; }
  bool empty() const { return layers_.empty(); }

 private:
  int dim_;
  std::vector<Layer> layers_;
};

/// Dimension of a layer, or -1 for dimension-free layers (LeakyRelu).
int layer_dim(const Layer& layer);

Vec chain_forward(const LayerChain& chain, const Vec& x);
Vec chain_inverse(const LayerChain& chain, const Vec& y);

/// log|det J_g(x)| evaluated along the forward pass from x.
double chain_log_abs_det(const LayerChain& chain, const Vec& x);

struct InversePass {
  Vec x;
  /// log|det J_{g^{-1}}(y)|, i.e. minus the forward log-det at x.
  double log_abs_det;
};

InversePass chain_inverse_pass(const LayerChain& chain, const Vec& y);

/// Output side: the new layer runs after the existing chain.
LayerChain chain_append(const LayerChain& chain, Layer layer);
/// Input side: the new layer runs before the existing chain (g o layer).
LayerChain chain_append_right(const LayerChain& chain, Layer layer);

/// Largest singular value by power iteration on A^T A, 200 iterations,
/// stopping at relative change 1e-10, start vector all-ones normalized.
double power_iteration_norm(const Mat& A);

/// Product of per-layer Lipschitz constants.
double lipschitz_upper_bound(const LayerChain& chain);

}  // namespace ild
