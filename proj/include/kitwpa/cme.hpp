#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kitwpa/device_model.hpp"
#include "kitwpa/integrator.hpp"
#include "kitwpa/table.hpp"
#include "kitwpa/units.hpp"

namespace kitwpa {

enum class ToneKind { pump, signal, idler, third_harmonic, usb_s, usb_i, aux };

const char* to_string(ToneKind kind);

enum class ModeSelection { three_mode, six_mode, two_tone };

const char* to_string(ModeSelection selection);
ModeSelection parse_mode_selection(const std::string& text);

/// One tone carried by the coupled-mode equations.
///
/// `mix` expresses the tone's frequency as an integer combination of the
/// mode set's base tones, so frequency bookkeeping in the mixing table is
/// exact.
struct Mode {
    ToneKind kind = ToneKind::aux;
    std::string name;
    std::vector<int> mix;
    double freq = 0.0;       // Hz, exact integer combination of base tones
    double omega = 0.0;      // rad/s
    double k = 0.0;          // rad/m
    cplx amplitude{};        // A, peak current
    double alpha = 0.0;      // 1/m, power attenuation

    [[nodiscard]] double frequency() const { return freq; }
};

/// A cubic product of three mode amplitudes driving `target`.
struct MixingTerm {
    std::size_t target = 0;
    std::array<std::size_t, 3> sources{};
    std::array<bool, 3> conjugate{};
    /// Distinct ordered arrangements of the signed source triple.
    int multiplicity = 0;
    /// Signed source wavenumbers minus the target wavenumber.
    double delta_k = 0.0;
};

struct PumpConfig {
    double frequency = 0.0;          // Hz
    double current = 0.0;            // A, peak amplitude
    ModeSelection selection = ModeSelection::six_mode;

    [[nodiscard]] double power() const { return amplitude_to_power(current); }
    static PumpConfig from_power(double frequency, double watt, ModeSelection selection);
    static PumpConfig from_ratio(double frequency, double current_ratio, double i_star,
                                 ModeSelection selection);
};

struct ModeSet {
    std::vector<double> base_frequencies;  // Hz
    std::vector<Mode> modes;
    std::vector<MixingTerm> terms;

    [[nodiscard]] std::size_t index_of(ToneKind kind) const;
    [[nodiscard]] std::size_t index_of(const std::string& name) const;
    [[nodiscard]] std::vector<cplx> amplitudes() const;
};

/// Every multiset of three signed modes whose frequencies sum to a mode of
/// the set. Terms are ordered by target, then by source indices.
std::vector<MixingTerm> enumerate_mixing_terms(const std::vector<Mode>& modes);

/// Builds the mode set for `pump.selection` (three- or six-mode) around a
/// signal at `f_s`. Signal and idler amplitudes start at zero.
ModeSet build_mode_set(const PumpConfig& pump, double f_s, const DispersionCurve& disp,
                       const DeviceSpec* spec = nullptr);

/// Pump, two tones, their idlers and the in-band third-order products
/// 2f1 - f2, 2f2 - f1 with their idlers.
ModeSet build_two_tone_mode_set(const PumpConfig& pump, double f1, double f2, const DispersionCurve& disp,
                                const DeviceSpec* spec = nullptr);

/// Residual of the 4WM phase-matching criterion including pump self-phase
/// modulation; zero at the phase-matched band centers.
double phase_mismatch(double f_s, const PumpConfig& pump, const DispersionCurve& disp, const DeviceSpec& spec);

struct CmeOptions {
    double tol = 1e-9;
    /// Freeze the pump: it keeps only its self-phase term and all other tones
    /// keep only terms linear in non-pump amplitudes.
    bool undepleted = false;
    bool lossless = false;
    bool record_trajectory = true;
};

struct CmeResult {
    std::vector<double> z;
    std::vector<std::vector<cplx>> amplitudes;
    std::size_t steps = 0;
    /// Set when any amplitude exceeded I* along the line.
    bool validity_warning = false;

    [[nodiscard]] const std::vector<cplx>& output() const { return amplitudes.back(); }
};

/// Integrates the coupled-mode equations in the frame rotating with each
/// mode's linear wavenumber over [0, z_span].
CmeResult cme_integrate(const ModeSet& state0, const DeviceSpec& spec, double z_span, const CmeOptions& options);

/// Frequency-translating gain G_ss - 1 scaled by w_i / w_s; throws DomainError for G_ss < 1.
double translate_gain(double g_ss, double omega_s, double omega_i);

struct GainSweepOptions {
    CmeOptions cme{};
    double seed_dbm = -110.0;
    unsigned jobs = 1;
};

/// Rows keyed by signal frequency: Gss_dB, Gii_dB, Gsi_dB and per-row status.
SweepResult gain_sweep(const PumpConfig& pump, std::span<const double> f_grid, const DeviceSpec& spec,
                       const DispersionCurve& disp, const GainSweepOptions& options = {});

struct ToneOutput {
    std::string name;
    double frequency = 0.0;  // Hz
    double power_dbm = 0.0;
};

/// Six-mode output powers at the end of the line for a signal of `p_s_dbm`
/// (use -inf for no signal).
std::vector<ToneOutput> output_spectrum(const PumpConfig& pump, double f_s, double p_s_dbm, const DeviceSpec& spec,
                                        const DispersionCurve& disp, const CmeOptions& options = {});

/// Output tone powers versus equal per-tone input power for two signals.
SweepResult two_tone_spectrum(double f1, double f2, std::span<const double> input_dbm, const PumpConfig& pump,
                              const DeviceSpec& spec, const DispersionCurve& disp,
                              const CmeOptions& options = {}, unsigned jobs = 1);

/// Single-tone compression sweep: signal output power versus input power.
SweepResult compression_sweep(double f_s, std::span<const double> input_dbm, const PumpConfig& pump,
                              const DeviceSpec& spec, const DispersionCurve& disp,
                              const CmeOptions& options = {}, unsigned jobs = 1);

inline constexpr std::size_t max_modes = 16;

}  // namespace kitwpa
