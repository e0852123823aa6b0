#pragma once

// Sequence operations on probabilistic sequences: addition of independent
// generation outputs, floored subtraction giving the equivalent load, and
// expectations.

#include <cstddef>
#include <vector>

#include "mgdispatch/errors.hpp"
#include "mgdispatch/prob_model.hpp"

namespace mgd::sot {

namespace detail {
inline void require_same_step(const ProbSeq& a, const ProbSeq& b, const char* op) {
  if (a.step() != b.step())
    throw ContractViolation(std::string(op) + ": sequences have different steps");
}
}  // namespace detail

/// Distribution of the sum of two independent quantities.
inline ProbSeq seq_add(const ProbSeq& a, const ProbSeq& b) {
  detail::require_same_step(a, b, "seq_add");
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  }
  return {a.step(), std::move(c)};
}

/// Distribution of max(d - c, 0) for independent d and c. Length follows d.
inline ProbSeq seq_sub_floor(const ProbSeq& d, const ProbSeq& c) {
  detail::require_same_step(d, c, "seq_sub_floor");
  std::vector<double> e(d.size(), 0.0);
  for (std::size_t id = 0; id < d.size(); ++id) {
    if (d[id] == 0.0) continue;
    for (std::size_t ic = 0; ic < c.size(); ++ic) {
      const std::size_t ie = id > ic ? id - ic : 0;
      e[ie] += d[id] * c[ic];
    }
  }
  return {d.step(), std::move(e)};
}

/// Mean power in kW.
inline double expectation(const ProbSeq& s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) sum += double(i) * s.step() * s[i];
  return sum;
}

/// Signed mean of load minus wind minus PV. Unlike the mean of the floored
/// sequence this may be negative.
inline double expected_equivalent_load(const ProbSeq& load, const ProbSeq& wind,
                                       const ProbSeq& pv) {
  detail::require_same_step(load, wind, "expected_equivalent_load");
  detail::require_same_step(load, pv, "expected_equivalent_load");
  return expectation(load) - expectation(wind) - expectation(pv);
}

}  // namespace mgd::sot
