#pragma once

#include <cmath>
#include <cstdint>

namespace interflow {

/// Session time in seconds since session start (virtual or wall).
using Seconds = double;

/// Integer microseconds. Boundary rules (suspension, gap, expiry, talk
/// accumulation) compare in this domain so that grid-aligned times such as
/// 0.1 + 15.0 land exactly on the boundary.
using Micros = std::int64_t;

inline Micros to_micros(Seconds s) { return static_cast<Micros>(std::llround(s * 1e6)); }
inline Seconds to_seconds(Micros us) { return static_cast<double>(us) / 1e6; }

}  // namespace interflow
