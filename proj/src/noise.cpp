#include "kitwpa/noise.hpp"

#include <cmath>
#include <limits>

#include "kitwpa/errors.hpp"
#include "kitwpa/units.hpp"

namespace kitwpa {

double photon_occupation(double f, double temperature) {
    if (!(f > 0.0) || !(temperature > 0.0))
        throw InvalidArgument("photon_occupation: frequency and temperature must be positive");
    const double x = constants::h * f / (constants::k_b * temperature);
    // 1/2 coth(x/2) = 1/x + x/12 - x^3/720 + ...
    if (x < 1e-6) return 1.0 / x + x / 12.0;
    return 0.5 / std::tanh(0.5 * x);
}

double hot_load_correction(double n_hot, double n_mxc, double l1) {
    if (!(l1 >= 0.0 && l1 <= 1.0)) throw InvalidArgument("hot_load_correction: L1 must lie in [0, 1]");
    return l1 * n_hot + (1.0 - l1) * n_mxc;
}

void NoiseChain::validate() const {
    if (!(t_hot > 0.0 && t_cold > 0.0 && t_mxc > 0.0)) throw InvalidArgument("noise chain: temperatures must be positive");
    if (!(l1 >= 0.0 && l1 <= 1.0) || !(l2 >= 0.0 && l2 <= 1.0))
        throw InvalidArgument("noise chain: L1 and L2 must lie in [0, 1]");
    if (!(omega_s > 0.0 && omega_i > 0.0)) throw InvalidArgument("noise chain: frequencies must be positive");
    if (!(g_si >= 0.0)) throw InvalidArgument("noise chain: G_si must be non-negative");
    if (!(idler_gain() >= 1.0)) throw InvalidArgument("noise chain: G_ii must be at least 1");
    if (!(g_hemt >= 1.0 && g_r >= 1.0)) throw InvalidArgument("noise chain: HEMT and room gains must be at least 1");
    if (!(a_hemt >= 0.0 && a_r >= 0.0)) throw InvalidArgument("noise chain: added noises must be non-negative");
    // The quantum-limited amplifier sits at A'_PA = 0 only up to how far
    // N_T(w_i) exceeds 1/2, so the bound is placed on A_PA = A'_PA + N_T(w_i).
    if (!(a_pa_prime + n_mxc_idler() >= 0.0)) throw InvalidArgument("noise chain: A_PA must be non-negative");
    if (!(bandwidth > 0.0)) throw InvalidArgument("noise chain: bandwidth must be positive");
}

double NoiseChain::idler_gain() const { return g_ii ? *g_ii : 1.0 + g_si * omega_s / omega_i; }

double NoiseChain::n_mxc_idler() const { return photon_occupation(rad_to_hz(omega_i), t_mxc); }

double NoiseChain::n_hot_effective() const {
    const double f_s = rad_to_hz(omega_s);
    return hot_load_correction(photon_occupation(f_s, t_hot), photon_occupation(f_s, t_mxc), l1);
}

double NoiseChain::n_cold() const { return photon_occupation(rad_to_hz(omega_s), t_cold); }

NoiseChain NoiseChain::from_idler_gain(NoiseChain chain, double g_ii) {
    if (!(g_ii >= 1.0)) throw InvalidArgument("from_idler_gain: G_ii must be at least 1");
    if (!(chain.omega_s > 0.0 && chain.omega_i > 0.0))
        throw InvalidArgument("from_idler_gain: frequencies must be set first");
    chain.g_si = (g_ii - 1.0) * chain.omega_i / chain.omega_s;
    chain.g_ii.reset();
    return chain;
}

double forward_chain_power(const NoiseChain& chain, Load which) {
    chain.validate();
    const double hb = constants::hbar;
    const double n_t_i = chain.n_mxc_idler();
    const double scale = chain.g_r * chain.bandwidth;
    if (which == Load::pump_off)
        return hb * chain.omega_i * ((n_t_i + chain.a_hemt) * chain.g_hemt + chain.a_r) * scale;
    const double n_load = which == Load::hot ? chain.n_hot_effective() : chain.n_cold();
    const double at_amp = hb * chain.omega_s * chain.g_si * (n_load + chain.a_pa_prime) +
                          hb * chain.omega_i * chain.idler_gain() * n_t_i;
    const double at_hemt = at_amp * chain.l2 + hb * chain.omega_i * ((1.0 - chain.l2) * n_t_i + chain.a_hemt);
    return (at_hemt * chain.g_hemt + chain.a_r * hb * chain.omega_i) * scale;
}

double y_factor(double p_hot, double p_cold) {
    if (!(p_cold > 0.0)) throw InversionError("y_factor: cold power must be positive");
    return p_hot / p_cold;
}

double modified_y_factor(double p_hot, double p_cold, double p_off) {
    const double den = p_cold - p_off;
    if (!(den > 0.0)) throw InversionError("modified_y_factor: cold power does not exceed the pump-off power");
    return (p_hot - p_off) / den;
}

double system_noise(double y, double n_hot_eff, double n_cold) {
    if (!(y > 1.0)) throw InversionError("system_noise: Y must exceed 1");
    const double n = (n_hot_eff - y * n_cold) / (y - 1.0);
    if (n < 0.0) throw InconsistentInputsError("system_noise: Y exceeds the physical bound N'_H / N_C");
    return n;
}

AddedNoise added_noise(double y_prime, double n_hot_eff, double n_cold, double n_mxc_idler) {
    const double a = system_noise(y_prime, n_hot_eff, n_cold);
    return {a, a - n_mxc_idler};
}

NoiseResult analyze_chain(const NoiseChain& chain) {
    const double p_hot = forward_chain_power(chain, Load::hot);
    const double p_cold = forward_chain_power(chain, Load::cold);
    const double p_off = forward_chain_power(chain, Load::pump_off);
    NoiseResult r;
    r.y = y_factor(p_hot, p_cold);
    r.y_prime = modified_y_factor(p_hot, p_cold, p_off);
    r.n_sys = system_noise(r.y, chain.n_hot_effective(), chain.n_cold());
    const AddedNoise a = added_noise(r.y_prime, chain.n_hot_effective(), chain.n_cold(), chain.n_mxc_idler());
    r.a_pa = a.a_pa;
    r.a_pa_prime = a.a_pa_prime;
    return r;
}

UncertaintyBand uncertainty_band(const NoiseChain& chain, double delta_t_hot) {
    if (!(delta_t_hot >= 0.0)) throw InvalidArgument("uncertainty_band: dT_H must be non-negative");
    const NoiseResult nominal = analyze_chain(chain);
    if (delta_t_hot == 0.0) return {};
    NoiseChain lo = chain, hi = chain;
    lo.t_hot -= delta_t_hot;
    hi.t_hot += delta_t_hot;
    if (!(lo.t_hot > 0.0)) throw InvalidArgument("uncertainty_band: dT_H must be below T_H");
    const double n_lo = (lo.n_hot_effective() - nominal.y * chain.n_cold()) / (nominal.y - 1.0);
    const double n_hi = (hi.n_hot_effective() - nominal.y * chain.n_cold()) / (nominal.y - 1.0);
    const double a_lo = (lo.n_hot_effective() - nominal.y_prime * chain.n_cold()) / (nominal.y_prime - 1.0);
    const double a_hi = (hi.n_hot_effective() - nominal.y_prime * chain.n_cold()) / (nominal.y_prime - 1.0);
    return {0.5 * std::abs(n_hi - n_lo), 0.5 * std::abs(a_hi - a_lo)};
}

SweepResult invert_traces(std::span<const double> f_idler, std::span<const double> p_hot_dbm,
                          std::span<const double> p_cold_dbm, std::span<const double> p_off_dbm,
                          const InversionSetup& setup) {
    const std::size_t n = f_idler.size();
    if (p_hot_dbm.size() != n || p_cold_dbm.size() != n || p_off_dbm.size() != n)
        throw InvalidArgument("invert_traces: trace lengths differ");
    if (!(setup.pump_frequency > 0.0)) throw InvalidArgument("invert_traces: pump frequency must be positive");
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> f_s(n), y(n, nan), yp(n, nan), nsys(n, nan), apa(n, nan), err(n, nan);
    std::vector<std::string> status(n, "ok");
    for (std::size_t r = 0; r < n; ++r) {
        f_s[r] = 2.0 * setup.pump_frequency - f_idler[r];
        try {
            if (!(f_s[r] > 0.0)) throw InvalidArgument("signal frequency is not positive");
            NoiseChain c;
            c.t_hot = setup.t_hot;
            c.t_cold = setup.t_cold;
            c.t_mxc = setup.t_mxc;
            c.l1 = setup.l1;
            c.omega_s = hz_to_rad(f_s[r]);
            c.omega_i = hz_to_rad(f_idler[r]);
            const double ph = dbm_to_watt(p_hot_dbm[r]);
            const double pc = dbm_to_watt(p_cold_dbm[r]);
            const double po = dbm_to_watt(p_off_dbm[r]);
            y[r] = y_factor(ph, pc);
            yp[r] = modified_y_factor(ph, pc, po);
            const double nh = c.n_hot_effective();
            const double nc = c.n_cold();
            nsys[r] = system_noise(y[r], nh, nc);
            apa[r] = added_noise(yp[r], nh, nc, c.n_mxc_idler()).a_pa;
            NoiseChain lo = c, hi = c;
            lo.t_hot -= setup.delta_t_hot;
            hi.t_hot += setup.delta_t_hot;
            err[r] = 0.5 * std::abs(hi.n_hot_effective() - lo.n_hot_effective()) / (y[r] - 1.0);
        } catch (const InversionError&) {
            status[r] = "inversion_error";
        } catch (const InconsistentInputsError&) {
            status[r] = "inconsistent_inputs";
        } catch (const InvalidArgument&) {
            status[r] = "invalid";
        }
    }
    SweepResult out;
    out.axis_label = "f_Hz";
    out.axis = std::move(f_s);
    out.add_column("Y", std::move(y));
    out.add_column("Yprime", std::move(yp));
    out.add_column("Nsys_photons", std::move(nsys));
    out.add_column("Apa_photons", std::move(apa));
    out.add_column("err_photons", std::move(err));
    out.status = std::move(status);
    return out;
}

}  // namespace kitwpa
