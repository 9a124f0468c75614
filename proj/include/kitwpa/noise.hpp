#pragma once

#include <optional>
#include <span>

#include "kitwpa/table.hpp"

namespace kitwpa {

/// Thermal occupation in photon units, 1/2 coth(hf / 2 k_B T).
double photon_occupation(double f, double temperature);

/// Hot-load noise referred to the amplifier input through the lossy input
/// path at the mixing-chamber temperature: L1 N_H + (1 - L1) N_T.
double hot_load_correction(double n_hot, double n_mxc, double l1);

/// Measurement chain in frequency-translating operation: a signal-band load
/// at the amplifier input, read out at the idler frequency.
///
/// Added noises are photon numbers referred to the idler frequency.
struct NoiseChain {
    double t_hot = 3.13;        // K
    double t_cold = 0.010;      // K
    double t_mxc = 0.012;       // K
    double l1 = 0.95;           // input path power transmission
    double l2 = 0.70;           // amplifier to HEMT transmission
    double g_si = 0.0;          // linear, signal to idler conversion gain
    std::optional<double> g_ii; // linear; defaults to 1 + G_si w_s / w_i
    double a_pa_prime = 0.5;    // photons, added noise beyond the idler input
    double a_hemt = 50.0;       // photons
    double g_hemt = 1e4;        // linear
    double a_r = 0.0;           // photons, room-temperature chain
    double g_r = 1e3;           // linear
    double bandwidth = 1e6;     // Hz
    double omega_s = 0.0;       // rad/s
    double omega_i = 0.0;       // rad/s

    void validate() const;

    [[nodiscard]] double idler_gain() const;
    [[nodiscard]] double n_mxc_idler() const;
    /// N'_H at the signal frequency.
    [[nodiscard]] double n_hot_effective() const;
    /// N'_C = N_C at the signal frequency.
    [[nodiscard]] double n_cold() const;

    /// Chain whose conversion gain is set from the idler gain by
    /// G_si = (G_ii - 1) w_i / w_s.
    static NoiseChain from_idler_gain(NoiseChain chain, double g_ii);
};

enum class Load { hot, cold, pump_off };

/// Spectrum-analyzer noise power in W for one load state.
double forward_chain_power(const NoiseChain& chain, Load which);

/// P_hot / P_cold.
double y_factor(double p_hot, double p_cold);

/// (P_hot - P_off) / (P_cold - P_off).
double modified_y_factor(double p_hot, double p_cold, double p_off);

/// (N'_H - Y N_C) / (Y - 1).
double system_noise(double y, double n_hot_eff, double n_cold);

struct AddedNoise {
    double a_pa = 0.0;        // photons, including the idler-input vacuum/thermal term
    double a_pa_prime = 0.0;  // photons, a_pa - N_T(w_i)
};

AddedNoise added_noise(double y_prime, double n_hot_eff, double n_cold, double n_mxc_idler);

struct NoiseResult {
    double y = 0.0;
    double y_prime = 0.0;
    double n_sys = 0.0;
    double a_pa = 0.0;
    double a_pa_prime = 0.0;
};

/// Forward powers for all three load states followed by the inversion.
NoiseResult analyze_chain(const NoiseChain& chain);

struct UncertaintyBand {
    double n_sys = 0.0;  // photons, half-width
    double a_pa = 0.0;   // photons, half-width
};

/// Half-width of N_sys and A_PA when T_H moves by +-dT_H with the measured
/// Y and Y' held fixed.
UncertaintyBand uncertainty_band(const NoiseChain& chain, double delta_t_hot);

/// Load temperatures and input loss used by trace inversion.
struct InversionSetup {
    double t_hot = 3.13;
    double t_cold = 0.010;
    double t_mxc = 0.012;
    double l1 = 0.95;
    double pump_frequency = 0.0;  // Hz
    double delta_t_hot = 0.05;    // K
};

/// Inverts spectrum-analyzer traces read out at idler frequencies f_i.
/// Powers are dBm; ratios are formed in linear power. Rows of the result are
/// keyed by the signal frequency 2 f_p - f_i with columns Y, Yprime,
/// Nsys_photons, Apa_photons and err_photons.
SweepResult invert_traces(std::span<const double> f_idler, std::span<const double> p_hot_dbm,
                          std::span<const double> p_cold_dbm, std::span<const double> p_off_dbm,
                          const InversionSetup& setup);

}  // namespace kitwpa
