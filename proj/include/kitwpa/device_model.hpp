#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "kitwpa/units.hpp"

namespace kitwpa {

/// Superconducting film parameters entering the characteristic current.
struct Material {
    double gap_parameter_ev = 0.0;       // Delta, eV
    double penetration_depth = 0.0;      // lambda_L, m
    double single_spin_dos = 0.0;        // N0, states / (eV m^3)
    double kappa_star = 1.0;
    double transition_temperature = 0.0; // K, informational only

    void validate() const;
};

/// One tabulated point of the power attenuation constant.
struct LossPoint {
    double frequency = 0.0;  // Hz
    double alpha = 0.0;      // 1/m, power attenuation (amplitude decays as alpha/2)
};

/// Stub-loaded nonlinear transmission line.
///
/// Each node along the line carries `stubs_per_node` open stubs whose length
/// is modulated sinusoidally with period `stub_mod_period`. Unloaded line and
/// stub parameters are inputs; the loaded impedance and velocity follow from
/// the cascade.
struct DeviceSpec {
    double line_impedance = 0.0;     // ohm, unloaded
    double line_velocity = 0.0;      // m/s, unloaded
    double stub_impedance = 0.0;     // ohm; +inf removes the stubs
    double stub_velocity = 0.0;      // m/s
    double stub_base_length = 0.0;   // m
    double stub_mod_amplitude = 0.0; // m
    double stub_mod_period = 0.0;    // m
    double cell_pitch = 0.0;         // m
    int stubs_per_node = 2;
    double total_length = 0.0;       // m
    double i_star = 0.0;             // A
    double i_quartic = 0.0;          // A
    std::vector<LossPoint> loss;     // empty means lossless
    double conductor_width = 0.0;    // m
    double conductor_thickness = 0.0;// m

    void validate() const;

    /// Power attenuation constant at `f`, linearly interpolated and held
    /// constant beyond the table ends.
    [[nodiscard]] double loss_at(double f) const;

    /// Cells per modulation period, round(period / pitch).
    [[nodiscard]] int cells_per_period() const;

    /// Pitch rescaled so that an integer number of cells spans one period.
    [[nodiscard]] double effective_pitch() const;

    /// Stub length at each cell of one modulation period.
    [[nodiscard]] std::vector<double> stub_lengths() const;

    [[nodiscard]] bool has_stubs() const;
};

struct StopBand {
    double lower = 0.0;   // Hz
    double upper = 0.0;   // Hz
    double center = 0.0;  // Hz

    [[nodiscard]] double width() const { return upper - lower; }
};

struct DispersionCurve {
    std::vector<double> frequency;        // Hz, strictly increasing
    std::vector<cplx> bloch_k;            // rad/m, imag >= 0
    std::vector<double> delta_k;          // rad/m
    std::vector<cplx> bloch_impedance;    // ohm
    std::vector<double> half_trace;       // Re(Tr M)/2
    std::vector<StopBand> stopbands;
    double reference_velocity = 0.0;      // m/s, low-frequency loaded velocity
    double period = 0.0;                  // m, supercell length

    [[nodiscard]] std::size_t size() const { return frequency.size(); }

    /// Real Bloch wavenumber at `f`: the linear reference plus a cubic
    /// Hermite interpolant of delta_k.
    [[nodiscard]] double wavenumber(double f) const;

    [[nodiscard]] bool in_stopband(double f) const;

    [[nodiscard]] double min_frequency() const { return frequency.front(); }
    [[nodiscard]] double max_frequency() const { return frequency.back(); }
};

/// Shunt admittance of the open stubs at one node.
/// Throws SingularityError at a quarter-wave pole.
cplx stub_admittance(double f, double stub_length, const DeviceSpec& spec);

/// ABCD matrix of a line section.
Eigen::Matrix2cd line_matrix(double f, double length, double impedance, double velocity);

/// ABCD matrix of one cell: half line, shunt stubs, half line.
Eigen::Matrix2cd cell_matrix(double f, double stub_length, const DeviceSpec& spec);

/// Cascade of all cells of one modulation period.
Eigen::Matrix2cd supercell_matrix(double f, const DeviceSpec& spec);

/// Bloch dispersion of the supercell on `f_grid`.
///
/// The branch of arccos(Tr M / 2) is tracked continuously from f = 0; an
/// internal ramp is prepended when the grid starts away from zero.
DispersionCurve bloch_dispersion(const DeviceSpec& spec, std::span<const double> f_grid);

/// Widest contiguous stop band within [lo, hi], or nothing.
std::optional<StopBand> find_stopband(const DispersionCurve& curve, double lo, double hi);

/// Characteristic nonlinearity current of a strip of width w and thickness t.
double i_star_from_material(const Material& m, double width, double thickness);

/// Fractional frequency shift of dispersion features under DC bias.
double bandgap_shift(double i_dc, double i_star, double i_quartic);

/// Dispersion under DC bias, obtained by rescaling the frequency axis.
/// Throws OutOfModelError when |i_dc| >= I*.
DispersionCurve biased_dispersion(const DeviceSpec& spec, const DispersionCurve& curve,
                                  double i_dc);

/// Loss table from insertion losses in the signal and idler bands.
std::vector<LossPoint> insertion_loss_table(double total_length, double signal_band_db = 0.85,
                                            double idler_band_db = 1.5);

/// Reference geometry with unloaded parameters estimated from a microstrip whose
/// stubs share the line's per-length inductance and capacitance, sized for a
/// loaded line of 50 ohm at 0.0064 c. Not yet calibrated.
DeviceSpec reference_geometry();

/// Scales line and stub velocities together so the first stop band in
/// [0.5 f, 1.5 f] is centered at `target_center`. All phases scale with f/v,
/// so the map is exact; a second pass absorbs grid quantization.
DeviceSpec calibrate_velocities(const DeviceSpec& spec, double target_center,
                                double min_stub_resonance = 3e9);

/// Lowest quarter-wave resonance over all stub lengths.
double lowest_stub_resonance(const DeviceSpec& spec);

/// Uniform frequency grid [start, stop] with `count` points.
std::vector<double> linear_grid(double start, double stop, std::size_t count);

}  // namespace kitwpa
