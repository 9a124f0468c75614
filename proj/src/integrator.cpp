#include "kitwpa/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kitwpa/errors.hpp"

namespace kitwpa {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - bhat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Trajectory integrate_dopri5(const ComplexRhs& rhs, std::span<const cplx> y0, double z0, double z1,
                            const IntegratorOptions& options) {
    if (!(options.rtol > 0.0)) throw InvalidArgument("integrate_dopri5: rtol must be positive");
    const std::size_t n = y0.size();
    const double span = z1 - z0;
    Trajectory traj;
    std::vector<cplx> y(y0.begin(), y0.end());
    traj.z.push_back(z0);
    traj.states.push_back(y);
    if (n == 0 || span == 0.0) return traj;
    const double dir = span > 0 ? 1.0 : -1.0;

    double atol = options.atol;
    if (atol <= 0.0) {
        double smallest = std::numeric_limits<double>::infinity();
        for (const cplx& v : y)
            if (std::abs(v) > 0.0) smallest = std::min(smallest, std::abs(v));
        atol = std::isfinite(smallest) ? options.rtol * 1e-3 * smallest : options.rtol * 1e-30;
    }

    std::vector<cplx> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);
    rhs(z0, y, k1);

    double h = options.initial_step;
    if (h <= 0.0) {
        // Hairer's starting-step heuristic.
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = atol + options.rtol * std::abs(y[i]);
            d0 = std::max(d0, std::abs(y[i]) / sc);
            d1 = std::max(d1, std::abs(k1[i]) / sc);
        }
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * std::abs(span) : 0.01 * d0 / d1;
        h = std::min(h, std::abs(span));
    }
    h = std::min(std::abs(h), std::abs(span));

    const double min_step = 1e-14 * std::abs(span);
    double z = z0;
    double err_prev = 1e-4;
    std::size_t steps = 0;

    while (dir * (z1 - z) > 0.0) {
        if (++steps > options.max_steps)
            throw StiffnessError("integrate_dopri5: step budget exhausted");
        bool last = false;
        if (h >= std::abs(z1 - z)) {
            h = std::abs(z1 - z);
            last = true;
        }
        if (h < min_step) throw StiffnessError("integrate_dopri5: step size underflow");
        const double hs = dir * h;

        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a21 * k1[i]);
        rhs(z + c2 * hs, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        rhs(z + c3 * hs, tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(z + c4 * hs, tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(z + c5 * hs, tmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const double z_next = last ? z1 : z + hs;
        rhs(z_next, tmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(z_next, ynew, k7);

        double err = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = atol + options.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(e) / sc);
            finite = finite && std::isfinite(ynew[i].real()) && std::isfinite(ynew[i].imag());
        }
        if (!finite) err = std::numeric_limits<double>::infinity();

        if (err <= 1.0) {
            z = z_next;
            y.swap(ynew);
            k1.swap(k7);
            ++traj.accepted;
            if (options.record_trajectory || last) {
                traj.z.push_back(z);
                traj.states.push_back(y);
            }
            // PI controller (Gustafsson), exponents for a 5th-order pair.
            const double e = std::max(err, 1e-10);
            double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
            fac = std::clamp(fac, 0.2, 5.0);
            err_prev = e;
            h *= fac;
            if (last) break;
        } else {
            ++traj.rejected;
            const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.1;
            h *= fac;
        }
    }
    if (!options.record_trajectory && traj.states.size() == 1) {
        traj.z.push_back(z);
        traj.states.push_back(y);
    }
    return traj;
}

}  // namespace kitwpa
