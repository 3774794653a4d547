#pragma once

#include <span>
#include <vector>

#include "ild/types.hpp"

namespace ild {

/// Affine autoregressive latent mechanism f(eps) = (I - L)^{-1} diag(S) eps + b.
///
/// L is strictly lower-triangular and S strictly positive, so the forward
/// matrix F is lower-triangular with diagonal S and the map is invertible.
/// Instances are immutable once constructed.
class AffineSCM {
 public:
  /// Validates the invariants; throws NotLowerTriangular, NonPositiveDiagonal
  /// or DimensionMismatch.
  AffineSCM(Mat L, Vec S, Vec b);

  static AffineSCM identity(int dim);

  int dim() const { return static_cast<int>(S_.size()); }
  const Mat& L() const { return L_; }
  const Vec& S() const { return S_; }
  const Vec& b() const { return b_; }

  /// Dense forward matrix F = (I - L)^{-1} diag(S).
  Mat matrix() const;
  /// Dense inverse matrix F^{-1} = diag(S)^{-1} (I - L).
  Mat inverse_matrix() const;
  /// Offset of the inverse map, -F^{-1} b.
  Vec inverse_offset() const;

 private:
  Mat L_;
  Vec S_;
  Vec b_;
};

/// Sorted 1-based indices of intervened mechanisms.
struct InterventionSet {
  std::vector<int> indices;
  double tolerance = kDefaultTolerance;

  int size() const { return static_cast<int>(indices.size()); }
  bool empty() const { return indices.empty(); }
  bool contains(int j) const;
};

Vec scm_forward(const AffineSCM& scm, const Vec& eps);
Vec scm_inverse(const AffineSCM& scm, const Vec& z);
double scm_log_abs_det(const AffineSCM& scm);

/// outer o inner.
AffineSCM scm_compose(const AffineSCM& outer, const AffineSCM& inner);
AffineSCM scm_invert(const AffineSCM& scm);

/// Factorizes a lower-triangular A with positive diagonal as (I - L)^{-1} diag(S).
AffineSCM scm_from_matrix(const Mat& A, const Vec& b);

/// Index j is intervened iff, for some pair of domains, row j of the inverse
/// maps (matrix row or offset) differs by more than tol in max-norm.
InterventionSet intervention_set(std::span<const AffineSCM> scms,
                                 double tol = kDefaultTolerance);

}  // namespace ild
