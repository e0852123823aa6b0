#pragma once

// Default microgrid equipment, applied when a scenario file omits a block.
// The three microturbines carry the published emission coefficients; their
// cost data and the storage unit are representative values for a
// laboratory-scale island system.

#include <cstddef>
#include <vector>

#include "mgdispatch/scenario.hpp"

namespace mgd::defaults {

inline constexpr double kLoadStdFraction = 0.10;
inline constexpr double kEssReservePrice = 0.02;  // $/kW

inline std::vector<MTUnit> units() {
  // Minimum output is 10 % of rating.
  return {
      {"MT1", 3.0, 30.0, 0.85, 0.42, 1.2, 0.040, {0.619, 184.0, 0.17, 0.000928}},
      {"MT2", 4.0, 40.0, 0.90, 0.38, 1.5, 0.035, {4.33, 232.0, 2.32, 0.00464}},
      {"MT3", 6.0, 60.0, 1.10, 0.26, 1.8, 0.030, {0.023, 635.0, 0.054, 0.0012}},
  };
}

inline ESSParams ess() { return {10.0, 100.0, 50.0, 30.0, 30.0, 0.9, 0.9, kEssReservePrice}; }

enum class TariffWindows {
  corrected,   // off-peak 00:00-08:00 and 19:00-20:00
  as_printed,  // off-peak 00:00-00:08 and 19:00-20:00; hour 0 is mostly flat
};

/// Hourly purchase/sale prices: peak 0.83/0.65, flat 0.49/0.38,
/// off-peak 0.17/0.13 $/kWh. Peak is 11:00-15:00.
inline TOUSchedule tou(TariffWindows windows = TariffWindows::corrected) {
  TOUSchedule s;
  for (std::size_t h = 0; h < 24; ++h) {
    const bool peak = h >= 11 && h < 15;
    const bool offpeak = h == 19 || (windows == TariffWindows::corrected && h < 8);
    s.purchase.push_back(peak ? 0.83 : offpeak ? 0.17 : 0.49);
    s.sale.push_back(peak ? 0.65 : offpeak ? 0.13 : 0.38);
  }
  return s;
}

}  // namespace mgd::defaults
