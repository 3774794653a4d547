#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ild/model.hpp"

namespace ild {

struct CanonicalizationReport {
  InterventionSet original_intervention;
  InterventionSet final_intervention;
  /// 1-based (j, j') pairs in the order applied.
  std::vector<std::pair<int, int>> swaps;
  std::vector<std::string> steps;
};

struct CanonicalCheck {
  bool canonical;
  InterventionSet intervention;
};

/// True iff the intervention set is exactly the trailing block {m-k+1..m}.
CanonicalCheck is_canonical(const ILDModel& model, double tol = kDefaultTolerance);

/// Conjugates every f_d by the transposition of j and j' and right-composes g
/// with it. Requires f_1 = Id, j < j', j intervened and nothing in (j, j']
/// intervened.
ILDModel swap_indices(const ILDModel& model, int j, int j_prime,
                      double tol = kDefaultTolerance);

struct CanonicalizationResult {
  ILDModel canonical;
  ILDModel identity_canonical;
  CanonicalizationReport report;
};

CanonicalizationResult canonicalize(const ILDModel& model, double tol = kDefaultTolerance);

}  // namespace ild
