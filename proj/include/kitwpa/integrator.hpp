#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "kitwpa/units.hpp"

namespace kitwpa {

/// dy/dz = f(z, y), written into `dydz`.
using ComplexRhs = std::function<void(double z, std::span<const cplx> y, std::span<cplx> dydz)>;

struct IntegratorOptions {
    double rtol = 1e-9;
    /// Per-component absolute floor of the error scale. Zero selects
    /// rtol * 1e-3 * (smallest nonzero initial magnitude).
    double atol = 0.0;
    double initial_step = 0.0;  // zero: estimated from the span
    std::size_t max_steps = 20'000'000;
    bool record_trajectory = true;
};

struct Trajectory {
    std::vector<double> z;
    std::vector<std::vector<cplx>> states;
    std::size_t accepted = 0;
    std::size_t rejected = 0;

    [[nodiscard]] const std::vector<cplx>& final_state() const { return states.back(); }
};

/// Embedded Dormand-Prince 5(4) with FSAL and a PI step controller.
/// Throws StiffnessError when the step underflows or the step budget runs out.
Trajectory integrate_dopri5(const ComplexRhs& rhs, std::span<const cplx> y0, double z0, double z1,
                            const IntegratorOptions& options = {});

}  // namespace kitwpa
