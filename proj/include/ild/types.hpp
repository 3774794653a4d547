#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ild {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Module-wide tolerance for intervention detection on inverse-map rows.
inline constexpr double kDefaultTolerance = 1e-8;

/// An observation tagged with its domain. Domains are labelled 1..N_d.
struct DomainSample {
  Vec x;
  int d = 1;
};

using Samples = std::vector<DomainSample>;

}  // namespace ild
