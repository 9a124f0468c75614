#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace kitwpa {

struct FitResult {
    double i_star = 0.0;     // A
    double i_quartic = 0.0;  // A; +inf when the quartic term is unconstrained
    double f0 = 0.0;         // Hz, zero-bias feature frequency
    /// Covariance of (I*, I4) in A^2, scaled by the residual variance.
    std::array<std::array<double, 2>, 2> covariance{};
    double f0_sigma = 0.0;   // Hz; zero when f0 was supplied
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    bool quartic_constrained = true;
    /// False when the currents span less than 0.3 I*.
    bool span_adequate = true;

    [[nodiscard]] double i_star_sigma() const;
    [[nodiscard]] double i_quartic_sigma() const;
};

struct BandgapFitOptions {
    /// Zero-bias frequency; fitted when absent.
    std::optional<double> f0;
    int max_iterations = 200;
    double tolerance = 1e-14;
};

/// Fits f(I) = f0 (1 - [(I/I*)^2 + (I/I4)^4] / 2) by damped least squares.
FitResult fit_bandgap_shift(std::span<const double> current, std::span<const double> frequency,
                            const BandgapFitOptions& options = {});

/// Input power where gain falls 1 dB below its small-signal value, or
/// nothing when the sweep never compresses that far.
std::optional<double> p1db(std::span<const double> p_in_dbm, std::span<const double> p_out_dbm);

struct Ip3Result {
    double iip3_dbm = 0.0;
    double fundamental_slope = 0.0;
    double intermod_slope = 0.0;
    std::size_t points_used = 0;
};

/// Input-referred third-order intercept from fundamental and intermod output
/// powers of an equal-power two-tone sweep.
Ip3Result ip3(std::span<const double> p_in_dbm, std::span<const double> p_fund_dbm,
              std::span<const double> p_imd_dbm);

/// Centered moving average; windows are truncated at the edges.
std::vector<double> smooth(std::span<const double> y, std::size_t window);

}  // namespace kitwpa
