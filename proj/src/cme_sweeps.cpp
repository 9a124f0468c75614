#include <cmath>
#include <limits>
#include <optional>

#include "kitwpa/cme.hpp"
#include "kitwpa/errors.hpp"
#include "parallel.hpp"

namespace kitwpa {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

std::string status_for(const std::exception_ptr& ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const ModeInGapError& e) {
        return "mode_in_gap:" + e.tone();
    } catch (const StiffnessError&) {
        return "stiff";
    } catch (const InvalidArgument&) {
        return "invalid";
    } catch (const std::exception&) {
        return "error";
    }
}

double power_dbm_of(cplx amplitude) {
    const double w = amplitude_to_power(std::abs(amplitude));
    return w > 0.0 ? watt_to_dbm(w) : -std::numeric_limits<double>::infinity();
}

CmeOptions endpoint_only(CmeOptions opts) {
    opts.record_trajectory = false;
    return opts;
}

}  // namespace

SweepResult gain_sweep(const PumpConfig& pump, std::span<const double> f_grid, const DeviceSpec& spec,
                       const DispersionCurve& disp, const GainSweepOptions& options) {
    if (pump.selection == ModeSelection::two_tone)
        throw InvalidArgument("gain_sweep: two-tone selection is not a gain model");
    const std::size_t n = f_grid.size();
    std::vector<double> gss(n, nan_value), gii(n, nan_value), gsi(n, nan_value);
    std::vector<std::string> status(n);
    const double seed = power_to_amplitude(dbm_to_watt(options.seed_dbm));
    const CmeOptions cme = endpoint_only(options.cme);
    const double length = spec.total_length;

    detail::parallel_for(n, options.jobs, [&](std::size_t r) {
        try {
            ModeSet set = build_mode_set(pump, f_grid[r], disp, &spec);
            const std::size_t js = set.index_of(ToneKind::signal);
            const std::size_t ji = set.index_of(ToneKind::idler);

            set.modes[js].amplitude = seed;
            const CmeResult sig = cme_integrate(set, spec, length, cme);
            set.modes[js].amplitude = 0.0;
            set.modes[ji].amplitude = seed;
            const CmeResult idl = cme_integrate(set, spec, length, cme);

            const double in = seed * seed;
            gss[r] = ratio_to_db(std::norm(sig.output()[js]) / in);
            gsi[r] = ratio_to_db(std::norm(sig.output()[ji]) / in);
            gii[r] = ratio_to_db(std::norm(idl.output()[ji]) / in);
            status[r] = (sig.validity_warning || idl.validity_warning) ? "warn_validity" : "ok";
        } catch (...) {
            status[r] = status_for(std::current_exception());
        }
    });

    SweepResult out;
    out.axis_label = "f_Hz";
    out.axis.assign(f_grid.begin(), f_grid.end());
    out.add_column("Gss_dB", std::move(gss));
    out.add_column("Gii_dB", std::move(gii));
    out.add_column("Gsi_dB", std::move(gsi));
    out.status = std::move(status);
    return out;
}

std::vector<ToneOutput> output_spectrum(const PumpConfig& pump, double f_s, double p_s_dbm, const DeviceSpec& spec,
                                        const DispersionCurve& disp, const CmeOptions& options) {
    PumpConfig six = pump;
    six.selection = ModeSelection::six_mode;
    ModeSet set = build_mode_set(six, f_s, disp, &spec);
    if (std::isfinite(p_s_dbm))
        set.modes[set.index_of(ToneKind::signal)].amplitude = power_to_amplitude(dbm_to_watt(p_s_dbm));
    else if (p_s_dbm > 0.0)
        throw InvalidArgument("output_spectrum: signal power must be finite or -inf");
    const CmeResult run = cme_integrate(set, spec, spec.total_length, endpoint_only(options));
    std::vector<ToneOutput> tones;
    for (std::size_t j = 0; j < set.modes.size(); ++j)
        tones.push_back({set.modes[j].name, set.modes[j].frequency(), power_dbm_of(run.output()[j])});
    return tones;
}

SweepResult two_tone_spectrum(double f1, double f2, std::span<const double> input_dbm, const PumpConfig& pump,
                              const DeviceSpec& spec, const DispersionCurve& disp, const CmeOptions& options,
                              unsigned jobs) {
    const ModeSet base = build_two_tone_mode_set(pump, f1, f2, disp, &spec);
    const std::size_t t1 = base.index_of("tone1");
    const std::size_t t2 = base.index_of("tone2");
    const std::size_t n = input_dbm.size();
    const std::size_t m = base.modes.size();
    std::vector<std::vector<double>> cols(m, std::vector<double>(n, nan_value));
    std::vector<std::string> status(n);
    const CmeOptions cme = endpoint_only(options);

    detail::parallel_for(n, jobs, [&](std::size_t r) {
        try {
            if (!std::isfinite(input_dbm[r])) throw InvalidArgument("input power must be finite");
            ModeSet set = base;
            const double a = power_to_amplitude(dbm_to_watt(input_dbm[r]));
            set.modes[t1].amplitude = a;
            set.modes[t2].amplitude = a;
            const CmeResult run = cme_integrate(set, spec, spec.total_length, cme);
            for (std::size_t j = 0; j < m; ++j) cols[j][r] = power_dbm_of(run.output()[j]);
            status[r] = run.validity_warning ? "warn_validity" : "ok";
        } catch (...) {
            status[r] = status_for(std::current_exception());
        }
    });

    SweepResult out;
    out.axis_label = "Pin_dBm";
    out.axis.assign(input_dbm.begin(), input_dbm.end());
    for (std::size_t j = 0; j < m; ++j) out.add_column("P_" + base.modes[j].name + "_dBm", std::move(cols[j]));
    out.status = std::move(status);
    return out;
}

SweepResult compression_sweep(double f_s, std::span<const double> input_dbm, const PumpConfig& pump,
                              const DeviceSpec& spec, const DispersionCurve& disp, const CmeOptions& options,
                              unsigned jobs) {
    if (pump.selection == ModeSelection::two_tone)
        throw InvalidArgument("compression_sweep: use a three- or six-mode selection");
    const ModeSet base = build_mode_set(pump, f_s, disp, &spec);
    const std::size_t js = base.index_of(ToneKind::signal);
    const std::size_t ji = base.index_of(ToneKind::idler);
    const std::size_t n = input_dbm.size();
    std::vector<double> pout(n, nan_value), gain(n, nan_value), pidl(n, nan_value);
    std::vector<std::string> status(n);
    const CmeOptions cme = endpoint_only(options);

    detail::parallel_for(n, jobs, [&](std::size_t r) {
        try {
            if (!std::isfinite(input_dbm[r])) throw InvalidArgument("input power must be finite");
            ModeSet set = base;
            set.modes[js].amplitude = power_to_amplitude(dbm_to_watt(input_dbm[r]));
            const CmeResult run = cme_integrate(set, spec, spec.total_length, cme);
            pout[r] = power_dbm_of(run.output()[js]);
            pidl[r] = power_dbm_of(run.output()[ji]);
            gain[r] = pout[r] - input_dbm[r];
            status[r] = run.validity_warning ? "warn_validity" : "ok";
        } catch (...) {
            status[r] = status_for(std::current_exception());
        }
    });

    SweepResult out;
    out.axis_label = "Pin_dBm";
    out.axis.assign(input_dbm.begin(), input_dbm.end());
    out.add_column("Pout_dBm", std::move(pout));
    out.add_column("Gain_dB", std::move(gain));
    out.add_column("Pidler_dBm", std::move(pidl));
    out.status = std::move(status);
    return out;
}

}  // namespace kitwpa
