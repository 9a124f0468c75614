#pragma once

#include <cmath>

#include "kitwpa/device_model.hpp"

namespace kitwpa::testing {

// Calibrated reference geometry, built once per test binary.
inline const DeviceSpec& reference_device() {
    static const DeviceSpec spec = calibrate_velocities(reference_geometry(), 2.0e9);
    return spec;
}

// Dispersion of the calibrated device on a 1 MHz grid up to 8 GHz.
inline const DispersionCurve& reference_dispersion() {
    static const DispersionCurve curve = bloch_dispersion(reference_device(), linear_grid(0.0, 8e9, 8001));
    return curve;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace kitwpa::testing
