#include "ild/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ild/error.hpp"
#include "ild/rng.hpp"

namespace ild {

ILDModel::ILDModel(LayerChain g, std::vector<AffineSCM> scms)
    : g_(std::move(g)), scms_(std::move(scms)) {
  require(scms_.size() >= 2, ErrorCode::InvalidArgument, "ILDModel: need at least two domains");
  for (const auto& scm : scms_) {
    require(scm.dim() == g_.dim(), ErrorCode::DimensionMismatch,
            "ILDModel: SCM dimension differs from mixing dimension");
  }
}

void ILDModel::check_domain(int d) const {
  if (d < 1 || d > num_domains()) {
    std::ostringstream msg;
    msg << "domain " << d << " outside [1, " << num_domains() << "]";
    fail(ErrorCode::DomainOutOfRange, msg.str());
  }
}

const AffineSCM& ILDModel::scm(int d) const {
  check_domain(d);
  return scms_[d - 1];
}

std::vector<Vec> ild_sample(const ILDModel& model, int d, int n, std::uint64_t seed) {
  const AffineSCM& f = model.scm(d);
  require(n >= 0, ErrorCode::InvalidArgument, "ild_sample: negative count");
  Rng rng(seed);
  std::vector<Vec> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(chain_forward(model.g(), scm_forward(f, rng.normal_vector(model.dim()))));
  }
  return out;
}

double ild_log_likelihood(const ILDModel& model, const Vec& x, int d) {
  const AffineSCM& f = model.scm(d);
  const InversePass pass = chain_inverse_pass(model.g(), x);
  const Vec eps = scm_inverse(f, pass.x);
  const double m = model.dim();
  const double log_normal = -0.5 * m * std::log(2.0 * std::numbers::pi) - 0.5 * eps.squaredNorm();
  return log_normal + pass.log_abs_det - scm_log_abs_det(f);
}

double mean_nll(const ILDModel& model, std::span<const DomainSample> samples) {
  require(!samples.empty(), ErrorCode::EmptyInput, "mean_nll: no samples");
  double total = 0.0;
  for (const auto& s : samples) total -= ild_log_likelihood(model, s.x, s.d);
  return total / static_cast<double>(samples.size());
}

Vec counterfactual(const ILDModel& model, const Vec& x, int d, int d_prime) {
  const AffineSCM& from = model.scm(d);
  const AffineSCM& to = model.scm(d_prime);
  const Vec eps = scm_inverse(from, chain_inverse(model.g(), x));
  return chain_forward(model.g(), scm_forward(to, eps));
}

namespace {

void check_same_shape(const ILDModel& a, const ILDModel& b, const char* what) {
  if (a.dim() != b.dim() || a.num_domains() != b.num_domains()) {
    std::ostringstream msg;
    msg << what << ": models differ in shape (" << a.dim() << "x" << a.num_domains() << " vs "
        << b.dim() << "x" << b.num_domains() << ")";
    fail(ErrorCode::DimensionMismatch, msg.str());
  }
}

}  // namespace

double dc_distance(const ILDModel& a, const ILDModel& b, std::span<const DomainSample> data,
                   std::uint64_t seed) {
  check_same_shape(a, b, "dc_distance");
  require(!data.empty(), ErrorCode::EmptyInput, "dc_distance: no data");
  Rng rng(seed);
  double total = 0.0;
  for (const auto& s : data) {
    // Drawing a label of a uniformly chosen sample is a draw from the
    // empirical domain marginal.
    const int d_prime = data[rng.index(data.size())].d;
    total += (counterfactual(a, s.x, s.d, d_prime) - counterfactual(b, s.x, s.d, d_prime))
                 .squaredNorm();
  }
  return std::sqrt(total / static_cast<double>(data.size()));
}

EquivalenceResult check_counterfactual_equiv(const ILDModel& a, const ILDModel& b,
                                             std::span<const DomainSample> points, double tol) {
  check_same_shape(a, b, "check_counterfactual_equiv");
  double worst = 0.0;
  for (const auto& p : points) {
    for (int d_prime = 1; d_prime <= a.num_domains(); ++d_prime) {
      const double gap = (counterfactual(a, p.x, p.d, d_prime) - counterfactual(b, p.x, p.d, d_prime))
                             .cwiseAbs()
                             .maxCoeff();
      worst = std::max(worst, gap);
    }
  }
  return {worst <= tol, worst};
}

EquivalenceResult check_distribution_equiv(const ILDModel& a, const ILDModel& b,
                                           std::span<const DomainSample> points, double tol) {
  check_same_shape(a, b, "check_distribution_equiv");
  double worst = 0.0;
  for (const auto& p : points) {
    worst = std::max(worst,
                     std::abs(ild_log_likelihood(a, p.x, p.d) - ild_log_likelihood(b, p.x, p.d)));
  }
  return {worst <= tol, worst};
}

ILDModel construct_equivalent(const ILDModel& model, const AffineSCM& h1, const AffineSCM& h2) {
  require(h1.dim() == model.dim() && h2.dim() == model.dim(), ErrorCode::DimensionMismatch,
          "construct_equivalent: h1/h2 dimension differs from the model");
  std::vector<AffineSCM> scms;
  scms.reserve(model.num_domains());
  for (const auto& f : model.scms()) scms.push_back(scm_compose(h1, scm_compose(f, h2)));
  return ILDModel(chain_append_right(model.g(), Triangular{scm_invert(h1)}), std::move(scms));
}

ShiftMoments mechanism_shift_moments(std::span<const AffineSCM> scms, int n_mc,
                                     std::uint64_t seed) {
  require(n_mc >= 1, ErrorCode::InvalidArgument, "mechanism_shift_moments: n_mc must be >= 1");
  require(scms.size() >= 2, ErrorCode::InvalidArgument,
          "mechanism_shift_moments: need at least two SCMs");
  const int m = scms.front().dim();
  const auto n_domains = static_cast<std::uint64_t>(scms.size());
  Rng rng(seed);
  Vec sum = Vec::Zero(m);
  Vec sum_sq = Vec::Zero(m);
  for (int i = 0; i < n_mc; ++i) {
    const Vec eps = rng.normal_vector(m);
    const auto d = rng.index(n_domains);
    auto d_prime = rng.index(n_domains - 1);
    if (d_prime >= d) ++d_prime;
    const Vec sq = (scm_forward(scms[d], eps) - scm_forward(scms[d_prime], eps)).array().square();
    sum += sq;
    sum_sq += sq.cwiseProduct(sq);
  }
  const double n = n_mc;
  ShiftMoments out;
  out.mean = sum / n;
  Vec var = (sum_sq / n - out.mean.cwiseProduct(out.mean)).cwiseMax(0.0);
  if (n_mc > 1) var *= n / (n - 1.0);
  out.std_error = (var / n).cwiseSqrt();
  return out;
}

double ground_truth_bound_term(const ILDModel& model, int n_mc, std::uint64_t seed) {
  const InterventionSet I = intervention_set(model.scms());
  if (I.empty()) return 0.0;
  const double lipschitz = lipschitz_upper_bound(model.g());
  const ShiftMoments moments = mechanism_shift_moments(model.scms(), n_mc, seed);
  return I.size() * lipschitz * lipschitz * moments.mean.maxCoeff();
}

}  // namespace ild
