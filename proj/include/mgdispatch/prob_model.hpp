#pragma once

// Uncertainty models for wind, PV and load, and their discretisation into
// probabilistic sequences on a fixed power grid of step q.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mgdispatch/errors.hpp"

namespace mgd {

struct WindParams {
  double shape_k = 2.0;
  double scale_gamma = 8.0;  // m/s
  double v_in = 3.0;         // cut-in, m/s
  double v_rated = 12.0;     // m/s
  double v_out = 25.0;       // cut-out, m/s
  double p_rated = 40.0;     // kW

  bool valid() const {
    return shape_k > 0 && scale_gamma > 0 && v_in > 0 && v_in < v_rated &&
           v_rated < v_out && p_rated > 0;
  }
  bool operator==(const WindParams&) const = default;
};

struct PVParams {
  double lambda1 = 2.0;
  double lambda2 = 2.0;
  double p_max = 0.0;  // kW
  // Panel description; only used to derive p_max when all three are present.
  std::optional<double> area;        // m^2
  std::optional<double> efficiency;  // fraction
  std::optional<double> r_max;       // W/m^2

  bool valid() const { return lambda1 > 0 && lambda2 > 0 && p_max >= 0; }
  bool operator==(const PVParams&) const = default;
};

struct LoadParams {
  double mean_mu = 0.0;    // kW
  double std_sigma = 0.0;  // kW

  bool valid() const { return mean_mu >= 0 && std_sigma >= 0; }
  bool operator==(const LoadParams&) const = default;
};

/// Discrete distribution over the power levels 0, q, 2q, ..., N*q.
class ProbSeq {
 public:
  ProbSeq() = default;
  ProbSeq(double step_q, std::vector<double> probs)
      : step_q_(step_q), probs_(std::move(probs)) {
    if (!(step_q_ > 0) || !std::isfinite(step_q_))
      throw ContractViolation("ProbSeq: step must be positive");
    if (probs_.empty()) throw ContractViolation("ProbSeq: empty sequence");
  }

  /// All mass at index `index`.
  static ProbSeq point_mass(double step_q, std::size_t index) {
    std::vector<double> p(index + 1, 0.0);
    p[index] = 1.0;
    return {step_q, std::move(p)};
  }

  double step() const noexcept { return step_q_; }
  std::size_t size() const noexcept { return probs_.size(); }
  std::size_t max_index() const noexcept { return probs_.size() - 1; }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const noexcept { return probs_; }

  double total() const {
    return std::accumulate(probs_.begin(), probs_.end(), 0.0);
  }

  /// Non-negative entries summing to 1 within `tol`.
  bool is_valid(double tol = 1e-9) const {
    for (double p : probs_)
      if (!(p >= 0) || !std::isfinite(p)) return false;
    return std::abs(total() - 1.0) <= tol;
  }

  bool operator==(const ProbSeq&) const = default;

 private:
  double step_q_ = 1.0;
  std::vector<double> probs_{1.0};
};

namespace detail {

inline constexpr double kQuadratureTol = 1e-9;

/// Adaptive Gauss-Kronrod on [a, b]; error target is absolute for
/// probability densities because their L1 norm is at most one.
template <class F>
double integrate(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 31>::integrate(f, a, b, 20, kQuadratureTol * 1e-2);
}

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite argument");
}

}  // namespace detail

/// Weibull wind speed density.
inline double wind_speed_pdf(double v, const WindParams& wp) {
  detail::require_finite(v, "wind_speed_pdf");
  if (v < 0) throw DomainError("wind_speed_pdf: negative wind speed");
  const double x = v / wp.scale_gamma;
  if (x == 0.0) {
    if (wp.shape_k > 1) return 0.0;
    if (wp.shape_k == 1) return 1.0 / wp.scale_gamma;
    return std::numeric_limits<double>::infinity();
  }
  return (wp.shape_k / wp.scale_gamma) * std::pow(x, wp.shape_k - 1) *
         std::exp(-std::pow(x, wp.shape_k));
}

/// Mixed distribution of the turbine output: a density on (0, p_rated) plus
/// point masses at 0 (below cut-in, above cut-out) and at p_rated (between
/// rated and cut-out speed).
struct WindOutputDensity {
  double density = 0.0;         // 1/kW, continuous part at p
  double mass_at_zero = 0.0;    // Pr{P = 0}
  double mass_at_rated = 0.0;   // Pr{P = p_rated}
};

/// Continuous branch of the turbine output density, via the linear power
/// curve v(p) = (1 + h p / p_rated) v_in with h = v_rated / v_in - 1.
inline double wt_output_density(double p, const WindParams& wp) {
  const double h = wp.v_rated / wp.v_in - 1.0;
  const double x = (1.0 + h * p / wp.p_rated) * wp.v_in / wp.scale_gamma;
  return (wp.shape_k * h * wp.v_in / (wp.scale_gamma * wp.p_rated)) *
         std::pow(x, wp.shape_k - 1) * std::exp(-std::pow(x, wp.shape_k));
}

inline double wt_mass_at_zero(const WindParams& wp) {
  auto f = [&](double v) { return wind_speed_pdf(v, wp); };
  // Tail above cut-out: integrate out to where the Weibull survival is
  // below double precision.
  const double v_far = wp.scale_gamma * std::pow(40.0, 1.0 / wp.shape_k);
  const double below = detail::integrate(f, 0.0, wp.v_in);
  const double above = wp.v_out < v_far ? detail::integrate(f, wp.v_out, v_far) : 0.0;
  return below + above;
}

inline double wt_mass_at_rated(const WindParams& wp) {
  return detail::integrate([&](double v) { return wind_speed_pdf(v, wp); },
                           wp.v_rated, wp.v_out);
}

inline WindOutputDensity wt_output_pdf(double p, const WindParams& wp) {
  detail::require_finite(p, "wt_output_pdf");
  if (p < 0 || p > wp.p_rated)
    throw DomainError("wt_output_pdf: power outside [0, p_rated]");
  return {wt_output_density(p, wp), wt_mass_at_zero(wp), wt_mass_at_rated(wp)};
}

/// Beta density of PV output scaled to [0, p_max].
inline double pv_output_pdf(double p, const PVParams& pv) {
  detail::require_finite(p, "pv_output_pdf");
  if (!(pv.p_max > 0))
    throw DomainError("pv_output_pdf: p_max = 0 is a point mass, not a density");
  if (p < 0 || p > pv.p_max) throw DomainError("pv_output_pdf: power outside [0, p_max]");
  const double x = p / pv.p_max;
  const double log_norm = std::lgamma(pv.lambda1 + pv.lambda2) -
                          std::lgamma(pv.lambda1) - std::lgamma(pv.lambda2);
  if ((x == 0.0 && pv.lambda1 < 1) || (x == 1.0 && pv.lambda2 < 1))
    return std::numeric_limits<double>::infinity();
  if ((x == 0.0 && pv.lambda1 > 1) || (x == 1.0 && pv.lambda2 > 1)) return 0.0;
  const double a = pv.lambda1 == 1 ? 0.0 : (pv.lambda1 - 1) * std::log(x);
  const double b = pv.lambda2 == 1 ? 0.0 : (pv.lambda2 - 1) * std::log1p(-x);
  return std::exp(log_norm + a + b) / pv.p_max;
}

inline double load_pdf(double p, const LoadParams& lp) {
  detail::require_finite(p, "load_pdf");
  if (!(lp.std_sigma > 0))
    throw DomainError("load_pdf: zero deviation is a point mass, not a density");
  const double z = (p - lp.mean_mu) / lp.std_sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * lp.std_sigma);
}

/// Expected turbine output in kW.
inline double mean_output(const WindParams& wp) {
  const double cont = detail::integrate(
      [&](double p) { return p * wt_output_density(p, wp); }, 0.0, wp.p_rated);
  return cont + wp.p_rated * wt_mass_at_rated(wp);
}

inline double mean_output(const PVParams& pv) {
  return pv.p_max * pv.lambda1 / (pv.lambda1 + pv.lambda2);
}

inline double mean_output(const LoadParams& lp) { return lp.mean_mu; }

namespace detail {

/// Integrates `density` over the grid bins [iq - q/2, iq + q/2] clipped to
/// [lo, hi], for indices first..last. The first bin extends down to `lo`
/// and the last bin up to `hi`.
template <class F>
std::vector<double> bin_integrals(F&& density, double q, double lo, double hi,
                                  std::size_t first, std::size_t last) {
  std::vector<double> probs(last + 1, 0.0);
  for (std::size_t i = first; i <= last; ++i) {
    const double a = i == first ? lo : std::max(lo, (double(i) - 0.5) * q);
    const double b = i == last ? hi : std::min(hi, (double(i) + 0.5) * q);
    probs[i] = integrate(density, a, b);
  }
  return probs;
}

/// Puts the truncation residual onto the heavier boundary bin and clears
/// round-off negatives.
inline ProbSeq finish(double q, std::vector<double> probs, std::size_t first) {
  for (double& p : probs) p = std::max(p, 0.0);
  const double residual = 1.0 - std::accumulate(probs.begin(), probs.end(), 0.0);
  std::size_t target = probs[first] >= probs.back() ? first : probs.size() - 1;
  probs[target] = std::max(0.0, probs[target] + residual);
  const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= sum;
  return {q, std::move(probs)};
}

inline std::size_t grid_index(double power, double q) {
  return static_cast<std::size_t>(std::floor(power / q + 0.5));
}

inline void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) warnings->push_back(std::move(msg));
}

inline void require_step(double q) {
  if (!(q > 0) || !std::isfinite(q)) throw ContractViolation("discretize: step must be positive");
}

}  // namespace detail

inline ProbSeq discretize(const WindParams& wp, double q,
                          std::vector<std::string>* warnings = nullptr) {
  detail::require_step(q);
  if (!wp.valid()) throw ContractViolation("discretize: invalid wind parameters");
  const std::size_t n = detail::grid_index(wp.p_rated, q);
  if (n == 0) {
    detail::warn(warnings, "wind: step exceeds output range, collapsed to one bin");
    return ProbSeq::point_mass(q, 0);
  }
  auto probs = detail::bin_integrals([&](double p) { return wt_output_density(p, wp); },
                                     q, 0.0, wp.p_rated, 0, n);
  probs.front() += wt_mass_at_zero(wp);
  probs.back() += wt_mass_at_rated(wp);
  return detail::finish(q, std::move(probs), 0);
}

inline ProbSeq discretize(const PVParams& pv, double q,
                          std::vector<std::string>* warnings = nullptr) {
  detail::require_step(q);
  if (!pv.valid()) throw ContractViolation("discretize: invalid PV parameters");
  if (pv.p_max == 0.0) return ProbSeq::point_mass(q, 0);
  const std::size_t n = detail::grid_index(pv.p_max, q);
  if (n == 0) {
    detail::warn(warnings, "pv: step exceeds output range, collapsed to one bin");
    return ProbSeq::point_mass(q, 0);
  }
  auto probs = detail::bin_integrals([&](double p) { return pv_output_pdf(p, pv); },
                                     q, 0.0, pv.p_max, 0, n);
  return detail::finish(q, std::move(probs), 0);
}

/// Gaussian load truncated at mean +/- 5 sigma and floored at 0 kW; the
/// tails beyond the truncation are folded into the boundary bins.
inline ProbSeq discretize(const LoadParams& lp, double q,
                          std::vector<std::string>* warnings = nullptr) {
  detail::require_step(q);
  if (!lp.valid()) throw ContractViolation("discretize: invalid load parameters");
  if (lp.std_sigma == 0.0) return ProbSeq::point_mass(q, detail::grid_index(lp.mean_mu, q));
  const double lo = std::max(0.0, lp.mean_mu - 5 * lp.std_sigma);
  const double hi = lp.mean_mu + 5 * lp.std_sigma;
  const std::size_t first = detail::grid_index(lo, q);
  const std::size_t last = detail::grid_index(hi, q);
  if (last == 0) {
    detail::warn(warnings, "load: step exceeds load range, collapsed to one bin");
    return ProbSeq::point_mass(q, 0);
  }
  // 8 sigma bounds carry the folded tails; the remaining mass is < 1e-15.
  const double tail_lo = lp.mean_mu - 8 * lp.std_sigma;
  const double tail_hi = lp.mean_mu + 8 * lp.std_sigma;
  auto probs = detail::bin_integrals([&](double p) { return load_pdf(p, lp); }, q,
                                     tail_lo, tail_hi, first, last);
  return detail::finish(q, std::move(probs), first);
}

}  // namespace mgd
