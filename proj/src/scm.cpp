#include "ild/scm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ild/error.hpp"

namespace ild {

namespace {

constexpr double kUpperTolerance = 1e-12;

void check_length(const Vec& v, int dim, const char* what) {
  if (v.size() != dim) {
    std::ostringstream msg;
    msg << what << ": expected length " << dim << ", got " << v.size();
    fail(ErrorCode::DimensionMismatch, msg.str());
  }
}

}  // namespace

AffineSCM::AffineSCM(Mat L, Vec S, Vec b) : L_(std::move(L)), S_(std::move(S)), b_(std::move(b)) {
  const int m = static_cast<int>(S_.size());
  require(m > 0, ErrorCode::DimensionMismatch, "AffineSCM: dimension must be positive");
  require(L_.rows() == m && L_.cols() == m && b_.size() == m, ErrorCode::DimensionMismatch,
          "AffineSCM: L, S and b must share the dimension");
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      if (L_(i, j) != 0.0) {
        std::ostringstream msg;
        msg << "AffineSCM: L(" << i + 1 << "," << j + 1 << ") = " << L_(i, j)
            << " is not strictly lower-triangular";
        fail(ErrorCode::NotLowerTriangular, msg.str());
      }
    }
    if (!(S_[i] > 0.0) || !std::isfinite(S_[i])) {
      std::ostringstream msg;
      msg << "AffineSCM: S[" << i + 1 << "] = " << S_[i] << " must be positive";
      fail(ErrorCode::NonPositiveDiagonal, msg.str());
    }
  }
}

AffineSCM AffineSCM::identity(int dim) {
  return AffineSCM(Mat::Zero(dim, dim), Vec::Ones(dim), Vec::Zero(dim));
}

Mat AffineSCM::matrix() const {
  const int m = dim();
  Mat unit = Mat::Identity(m, m) - L_;
  Mat F = unit.triangularView<Eigen::UnitLower>().solve(Mat::Identity(m, m));
  return F * S_.asDiagonal();
}

Mat AffineSCM::inverse_matrix() const {
  const int m = dim();
  return S_.cwiseInverse().asDiagonal() * (Mat::Identity(m, m) - L_);
}

Vec AffineSCM::inverse_offset() const { return -(inverse_matrix() * b_); }

bool InterventionSet::contains(int j) const {
  return std::binary_search(indices.begin(), indices.end(), j);
}

Vec scm_forward(const AffineSCM& scm, const Vec& eps) {
  const int m = scm.dim();
  check_length(eps, m, "scm_forward");
  const Mat& L = scm.L();
  Vec z(m);
  for (int i = 0; i < m; ++i) {
    double acc = scm.S()[i] * eps[i];
    for (int j = 0; j < i; ++j) acc += L(i, j) * z[j];
    z[i] = acc;
  }
  return z + scm.b();
}

Vec scm_inverse(const AffineSCM& scm, const Vec& z) {
  const int m = scm.dim();
  check_length(z, m, "scm_inverse");
  const Mat& L = scm.L();
  const Vec r = z - scm.b();
  Vec eps(m);
  for (int i = 0; i < m; ++i) {
    double acc = r[i];
    for (int j = 0; j < i; ++j) acc -= L(i, j) * r[j];
    eps[i] = acc / scm.S()[i];
  }
  return eps;
}

double scm_log_abs_det(const AffineSCM& scm) { return scm.S().array().log().sum(); }

AffineSCM scm_compose(const AffineSCM& outer, const AffineSCM& inner) {
  require(outer.dim() == inner.dim(), ErrorCode::DimensionMismatch,
          "scm_compose: dimensions differ");
  const Mat F_out = outer.matrix();
  Mat F = (F_out * inner.matrix()).triangularView<Eigen::Lower>();
  return scm_from_matrix(F, F_out * inner.b() + outer.b());
}

AffineSCM scm_invert(const AffineSCM& scm) {
  const Mat F_inv = scm.inverse_matrix();
  return scm_from_matrix(F_inv, -(F_inv * scm.b()));
}

AffineSCM scm_from_matrix(const Mat& A, const Vec& b) {
  const int m = static_cast<int>(A.rows());
  require(A.cols() == m && b.size() == m, ErrorCode::DimensionMismatch,
          "scm_from_matrix: A must be square and match b");
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if (std::abs(A(i, j)) > kUpperTolerance) {
        std::ostringstream msg;
        msg << "scm_from_matrix: A(" << i + 1 << "," << j + 1 << ") = " << A(i, j)
            << " above the diagonal";
        fail(ErrorCode::NotLowerTriangular, msg.str());
      }
    }
    if (!(A(i, i) > 0.0)) {
      std::ostringstream msg;
      msg << "scm_from_matrix: diagonal entry " << i + 1 << " = " << A(i, i)
          << " is not positive";
      fail(ErrorCode::NonPositiveDiagonal, msg.str());
    }
  }
  Vec S = A.diagonal();
  // A = (I - L)^{-1} diag(S)  =>  I - L = diag(S) A^{-1}.
  Mat A_inv = A.triangularView<Eigen::Lower>().solve(Mat::Identity(m, m));
  Mat L = -(S.asDiagonal() * A_inv);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) L(i, j) = 0.0;
  }
  return AffineSCM(std::move(L), std::move(S), b);
}

InterventionSet intervention_set(std::span<const AffineSCM> scms, double tol) {
  require(scms.size() >= 2, ErrorCode::InvalidArgument,
          "intervention_set: need at least two SCMs");
  require(tol > 0.0, ErrorCode::InvalidArgument, "intervention_set: tolerance must be positive");
  const int m = scms.front().dim();
  std::vector<Mat> rows;
  std::vector<Vec> offsets;
  for (const auto& scm : scms) {
    require(scm.dim() == m, ErrorCode::DimensionMismatch, "intervention_set: dimensions differ");
    rows.push_back(scm.inverse_matrix());
    offsets.push_back(scm.inverse_offset());
  }
  InterventionSet out;
  out.tolerance = tol;
  for (int j = 0; j < m; ++j) {
    bool differs = false;
    for (std::size_t a = 0; a < scms.size() && !differs; ++a) {
      for (std::size_t c = a + 1; c < scms.size() && !differs; ++c) {
        const double row_gap = (rows[a].row(j) - rows[c].row(j)).cwiseAbs().maxCoeff();
        const double offset_gap = std::abs(offsets[a][j] - offsets[c][j]);
        differs = std::max(row_gap, offset_gap) > tol;
      }
    }
    if (differs) out.indices.push_back(j + 1);
  }
  return out;
}

}  // namespace ild
