#include "ild/canonical.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ild/error.hpp"

namespace ild {

namespace {

std::string format_set(const InterventionSet& set) {
  std::ostringstream out;
  out << "{";
  for (std::size_t i = 0; i < set.indices.size(); ++i) out << (i ? "," : "") << set.indices[i];
  out << "}";
  return out.str();
}

bool is_identity(const AffineSCM& f, double tol) {
  return f.L().cwiseAbs().maxCoeff() <= tol && (f.S().array() - 1.0).abs().maxCoeff() <= tol &&
         f.b().cwiseAbs().maxCoeff() <= tol;
}

// Conjugation P f P by a transposition, done on (L, S, b) directly:
// P (I - L)^{-1} diag(S) P = (I - P L P)^{-1} diag(P S).
AffineSCM conjugate_by_swap(const AffineSCM& f, const std::vector<int>& perm, double tol) {
  const int m = f.dim();
  Mat L(m, m);
  Vec S(m);
  Vec b(m);
  for (int r = 0; r < m; ++r) {
    S[r] = f.S()[perm[r]];
    b[r] = f.b()[perm[r]];
    for (int c = 0; c < m; ++c) L(r, c) = f.L()(perm[r], perm[c]);
  }
  for (int r = 0; r < m; ++r) {
    for (int c = r; c < m; ++c) {
      if (std::abs(L(r, c)) > tol) {
        std::ostringstream msg;
        msg << "swap_indices: entry (" << r + 1 << "," << c + 1 << ") = " << L(r, c)
            << " lands above the diagonal";
        fail(ErrorCode::TriangularityBroken, msg.str());
      }
      L(r, c) = 0.0;
    }
  }
  return AffineSCM(std::move(L), std::move(S), std::move(b));
}

}  // namespace

CanonicalCheck is_canonical(const ILDModel& model, double tol) {
  InterventionSet I = intervention_set(model.scms(), tol);
  const int m = model.dim();
  bool trailing = true;
  for (int i = 0; i < I.size(); ++i) trailing = trailing && I.indices[i] == m - I.size() + 1 + i;
  return {trailing, std::move(I)};
}

ILDModel swap_indices(const ILDModel& model, int j, int j_prime, double tol) {
  const int m = model.dim();
  if (!(1 <= j && j < j_prime && j_prime <= m)) {
    std::ostringstream msg;
    msg << "swap_indices: need 1 <= j < j' <= " << m << ", got j=" << j << ", j'=" << j_prime;
    fail(ErrorCode::PreconditionViolated, msg.str());
  }
  if (!is_identity(model.scms().front(), tol)) {
    fail(ErrorCode::PreconditionViolated, "swap_indices: f_1 is not the identity");
  }
  const InterventionSet I = intervention_set(model.scms(), tol);
  if (!I.contains(j)) {
    fail(ErrorCode::PreconditionViolated,
         "swap_indices: j=" + std::to_string(j) + " is not intervened");
  }
  for (int between = j + 1; between <= j_prime; ++between) {
    if (I.contains(between)) {
      fail(ErrorCode::PreconditionViolated,
           "swap_indices: index " + std::to_string(between) + " in (j, j'] is intervened");
    }
  }
  const Permute swap = Permute::swap(m, j, j_prime);
  std::vector<AffineSCM> scms;
  scms.reserve(model.num_domains());
  for (const auto& f : model.scms()) scms.push_back(conjugate_by_swap(f, swap.perm(), tol));
  // P is its own inverse, so g o P^{-1} = g o P.
  return ILDModel(chain_append_right(model.g(), swap), std::move(scms));
}

CanonicalizationResult canonicalize(const ILDModel& model, double tol) {
  const int m = model.dim();
  CanonicalizationReport report;
  report.original_intervention = intervention_set(model.scms(), tol);

  // Step 1: make the first domain the identity.
  const AffineSCM& f1 = model.scms().front();
  const AffineSCM f1_inv = scm_invert(f1);
  std::vector<AffineSCM> scms;
  scms.push_back(AffineSCM::identity(m));
  for (std::size_t d = 1; d < model.scms().size(); ++d) {
    scms.push_back(scm_compose(f1_inv, model.scms()[d]));
  }
  ILDModel current(chain_append_right(model.g(), Triangular{f1}), std::move(scms));
  report.steps.push_back("step 1: f_d <- f_1^{-1} o f_d, g <- g o f_1; I = " +
                         format_set(intervention_set(current.scms(), tol)));

  // Step 2: move intervened indices to the end, one transposition at a time.
  for (;;) {
    const InterventionSet I = intervention_set(current.scms(), tol);
    int j_prime = 0;
    for (int j = m; j >= 1; --j) {
      if (!I.contains(j)) {
        j_prime = j;
        break;
      }
    }
    int j = 0;
    for (int cand = j_prime - 1; cand >= 1; --cand) {
      if (I.contains(cand)) {
        j = cand;
        break;
      }
    }
    if (j_prime == 0 || j == 0) break;
    current = swap_indices(current, j, j_prime, tol);
    report.swaps.emplace_back(j, j_prime);
    report.steps.push_back("step 2: swap " + std::to_string(j) + " <-> " +
                           std::to_string(j_prime) + "; I = " +
                           format_set(intervention_set(current.scms(), tol)));
  }
  ILDModel identity_canonical = current;

  // Step 3: restore f_1 while keeping the intervention set.
  std::vector<AffineSCM> restored;
  restored.reserve(current.scms().size());
  for (const auto& f : current.scms()) restored.push_back(scm_compose(f1, f));
  ILDModel canonical(chain_append_right(current.g(), Triangular{f1_inv}), std::move(restored));
  report.final_intervention = intervention_set(canonical.scms(), tol);
  report.steps.push_back("step 3: f_d <- f_1 o f_d, g <- g o f_1^{-1}; I = " +
                         format_set(report.final_intervention));

  return {std::move(canonical), std::move(identity_canonical), std::move(report)};
}

}  // namespace ild
