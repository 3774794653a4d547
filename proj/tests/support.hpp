#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "ild/error.hpp"
#include "ild/model.hpp"
#include "ild/rng.hpp"

namespace ild::test {

inline Mat random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  Mat A(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) A(r, c) = scale * rng.normal();
  }
  return A;
}

inline AffineSCM random_scm(Rng& rng, int m, double scale = 0.5) {
  Mat L = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < i; ++j) L(i, j) = scale * rng.normal();
  }
  Vec S(m);
  for (int i = 0; i < m; ++i) S[i] = std::exp(0.3 * rng.normal());
  return AffineSCM(std::move(L), std::move(S), rng.normal_vector(m));
}

/// I + 0.3 N, which is comfortably invertible for the sizes used in tests.
inline Mat well_conditioned(Rng& rng, int m) {
  return Mat::Identity(m, m) + random_matrix(rng, m, m, 0.3);
}

inline std::vector<int> random_perm(Rng& rng, int m) {
  std::vector<int> p(m);
  for (int i = 0; i < m; ++i) p[i] = i;
  for (int i = m - 1; i > 0; --i) std::swap(p[i], p[rng.index(i + 1)]);
  return p;
}

inline LayerChain random_chain(Rng& rng, int m) {
  std::vector<Layer> layers;
  layers.emplace_back(AffineDense(well_conditioned(rng, m), rng.normal_vector(m)));
  layers.emplace_back(LeakyRelu(rng.uniform(0.2, 1.0)));
  layers.emplace_back(Permute(random_perm(rng, m)));
  layers.emplace_back(Triangular{random_scm(rng, m, 0.3)});
  layers.emplace_back(AffineDense(well_conditioned(rng, m), rng.normal_vector(m)));
  return LayerChain(m, std::move(layers));
}

/// Shared base SCM with the rows in `intervened` (1-based) redrawn per domain.
inline std::vector<AffineSCM> sparse_family(Rng& rng, int m, int domains,
                                            const std::vector<int>& intervened) {
  const AffineSCM base = random_scm(rng, m);
  std::vector<AffineSCM> out;
  for (int d = 0; d < domains; ++d) {
    const AffineSCM fresh = random_scm(rng, m);
    Mat L = base.L();
    Vec S = base.S();
    Vec b = base.b();
    for (int j : intervened) {
      L.row(j - 1) = fresh.L().row(j - 1);
      S[j - 1] = fresh.S()[j - 1];
      b[j - 1] = fresh.b()[j - 1];
    }
    out.emplace_back(std::move(L), std::move(S), std::move(b));
  }
  return out;
}

inline ILDModel random_model(Rng& rng, int m, int domains) {
  std::vector<AffineSCM> scms;
  for (int d = 0; d < domains; ++d) scms.push_back(random_scm(rng, m));
  return ILDModel(random_chain(rng, m), std::move(scms));
}

inline Samples random_points(Rng& rng, int m, int domains, int n, double scale = 1.0) {
  Samples out;
  for (int i = 0; i < n; ++i) {
    out.push_back({scale * rng.normal_vector(m), 1 + static_cast<int>(rng.index(domains))});
  }
  return out;
}

inline Mat lower_ones(int m) {
  Mat A = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) A(i, j) = 1.0;
  }
  return A;
}

inline Mat rows(std::initializer_list<std::initializer_list<double>> values) {
  const int r = static_cast<int>(values.size());
  const int c = static_cast<int>(values.begin()->size());
  Mat A(r, c);
  int i = 0;
  for (const auto& row : values) {
    int j = 0;
    for (double v : row) A(i, j++) = v;
    ++i;
  }
  return A;
}

inline Mat example_f1() { return lower_ones(4); }
inline Mat example_f2() {
  return rows({{1, 0, 0, 0}, {2, 2, 0, 0}, {1, 1, 1, 0}, {1, 1, 1, 1}});
}

/// Small 2-d model whose mass sits well inside [-8, 8]^2.
inline ILDModel compact_model(Rng& rng) {
  std::vector<AffineSCM> scms;
  for (int d = 0; d < 2; ++d) {
    const AffineSCM f = random_scm(rng, 2, 0.3);
    scms.emplace_back(f.L(), f.S(), 0.3 * f.b());
  }
  auto dense = [&] {
    return AffineDense(Mat::Identity(2, 2) + random_matrix(rng, 2, 2, 0.2), 0.3 * rng.normal_vector(2));
  };
  return ILDModel(LayerChain(2, {dense(), LeakyRelu(rng.uniform(0.4, 1.0)), dense()}),
                  std::move(scms));
}

/// The worked 4-variable, 2-domain model with g a generic dense map.
inline ILDModel example_model() {
  const Mat G = rows({{2, 1, 0, 0.5}, {0, 1, -1, 0}, {1, 0, 3, 0}, {0.5, 0, 0, 1}});
  std::vector<AffineSCM> scms{scm_from_matrix(example_f1(), Vec::Zero(4)),
                              scm_from_matrix(example_f2(), Vec::Zero(4))};
  return ILDModel(LayerChain(4, {AffineDense(G, Vec::Zero(4))}), std::move(scms));
}

/// Runs fn and returns the code of the ild::Error it throws; std::nullopt if
/// nothing was thrown.
template <class F>
std::optional<ErrorCode> code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline double max_abs_diff(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace ild::test
