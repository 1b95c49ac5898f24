#pragma once

#include <numbers>

namespace tcoupler {

/// Magnetic flux quantum h/2e in webers.
inline constexpr double kFluxQuantum = 2.067833848e-15;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Unit helpers so call sites read in the units the device is specified in.
inline constexpr double kPico = 1e-12;
inline constexpr double kNano = 1e-9;
inline constexpr double kMicro = 1e-6;
inline constexpr double kMega = 1e6;
inline constexpr double kGiga = 1e9;

}  // namespace tcoupler
