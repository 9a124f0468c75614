// Acceptance checks against the reference device and measurement chain.
//
// Usage: acceptance [criterion ...]
// With no arguments every criterion runs. Each check prints one line,
// "PASS criterion <id>: ..." or "FAIL criterion <id>: ...", with the
// measured value and the pinned tolerance. The exit status is nonzero when
// any requested check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kitwpa/cli.hpp"
#include "kitwpa/cme.hpp"
#include "kitwpa/device_model.hpp"
#include "kitwpa/extract.hpp"
#include "kitwpa/noise.hpp"
#include "kitwpa/table.hpp"
#include "kitwpa/units.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace kitwpa;
using kitwpa::testing::reference_device;
using kitwpa::testing::reference_dispersion;
namespace fs = std::filesystem;

namespace {

constexpr double pump_ratio = 0.117;

struct Reporter {
    std::string id;
    bool ok = true;

    void check(bool pass, const std::string& what) {
        std::printf("%s criterion %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), what.c_str());
        std::fflush(stdout);
        ok = ok && pass;
    }

    void note(const std::string& what) {
        std::printf("INFO criterion %s: %s\n", id.c_str(), what.c_str());
        std::fflush(stdout);
    }
};

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

PumpConfig reference_pump(ModeSelection sel, double f = 1.6e9) {
    return PumpConfig::from_ratio(f, pump_ratio, reference_device().i_star, sel);
}

CmeOptions undepleted_lossless() {
    CmeOptions o;
    o.undepleted = true;
    o.lossless = true;
    o.record_trajectory = false;
    return o;
}

// Runs of rows whose signal gain exceeds `threshold_db`. Rows without a
// result (a tone in a stop band) neither open nor close a run.
std::vector<std::pair<double, double>> gain_bands(const SweepResult& t, double threshold_db) {
    std::vector<std::pair<double, double>> bands;
    const auto& g = t.column("Gss_dB");
    bool open = false;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        if (!std::isfinite(g[r])) continue;
        const bool in = g[r] > threshold_db;
        if (in && !open) bands.emplace_back(t.axis[r], t.axis[r]);
        if (in) bands.back().second = t.axis[r];
        open = in;
    }
    return bands;
}

double peak_of(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v)
        if (std::isfinite(x)) m = std::max(m, x);
    return m;
}

// ------------------------------------------------------------- criteria

void stop_band(Reporter& rep) {
    const DeviceSpec& spec = reference_device();
    const double bragg = 2.08e9;
    const auto start = std::chrono::steady_clock::now();
    const DispersionCurve curve = bloch_dispersion(spec, linear_grid(0.0, 8e9, 2000));
    const double elapsed = seconds_since(start);
    const auto band = find_stopband(curve, 0.5e9, 3e9);
    if (!band) {
        rep.check(false, "no stop band between 0.5 and 3 GHz");
        return;
    }
    rep.check(std::abs(band->center - bragg) <= 0.1 * bragg,
              fmt("stop-band center %.4f GHz vs Bragg estimate 2.08 GHz (tolerance +-10%%)", band->center / 1e9));
    rep.check(std::abs(band->center - 2e9) <= 0.05 * 2e9,
              fmt("stop band %.4f-%.4f GHz lies near 2 GHz (tolerance +-5%%)", band->lower / 1e9, band->upper / 1e9));
    rep.check(elapsed < 5.0, fmt("2000-point dispersion grid in %.3f s (limit 5 s)", elapsed));
}

void gain_reproduction(Reporter& rep) {
    const DeviceSpec& spec = reference_device();
    const DispersionCurve& disp = reference_dispersion();
    const PumpConfig pump = reference_pump(ModeSelection::six_mode);
    const auto grid = linear_grid(50e6, 3.15e9, 500);
    rep.note(fmt("pump 1.6 GHz, I_p/I* = %.3f, L = %.2f m, %u worker(s)", pump_ratio, spec.total_length,
                 worker_count()));
    for (bool lossless : {false, true}) {
        GainSweepOptions o;
        o.cme.lossless = lossless;
        o.cme.record_trajectory = false;
        o.jobs = worker_count();
        const auto start = std::chrono::steady_clock::now();
        const SweepResult t = gain_sweep(pump, grid, spec, disp, o);
        const double elapsed = seconds_since(start);
        const char* label = lossless ? "lossless" : "lossy";
        const auto bands = gain_bands(t, 3.0);
        std::string list;
        for (const auto& [lo, hi] : bands) list += fmt(" [%.3f, %.3f]", lo / 1e9, hi / 1e9);
        rep.check(bands.size() == 3, fmt("%s: %zu disjoint bands above 3 dB (GHz):%s (expected 3)", label,
                                         bands.size(), list.c_str()));
        const double peak = peak_of(t.column("Gss_dB"));
        rep.check(std::abs(peak - 20.0) <= 3.0, fmt("%s: peak signal gain %.2f dB (expected 20 +- 3 dB)", label, peak));
        rep.check(elapsed < 60.0, fmt("%s: 500-point sweep in %.1f s (limit 60 s)", label, elapsed));
    }
}

void phase_matching(Reporter& rep) {
    const DeviceSpec& spec = reference_device();
    const DispersionCurve& disp = reference_dispersion();
    const double step = 20e6;
    for (double f_p = 1.5e9; f_p <= 1.8e9 + 1.0; f_p += 0.05e9) {
        const PumpConfig pump = reference_pump(ModeSelection::three_mode, f_p);
        std::vector<double> grid;
        for (double f = 0.2e9; f < f_p - 0.1e9; f += step) grid.push_back(f);
        GainSweepOptions o;
        o.cme = undepleted_lossless();
        o.jobs = worker_count();
        const SweepResult t = gain_sweep(pump, grid, spec, disp, o);
        const auto& g = t.column("Gss_dB");
        std::size_t best = 0;
        for (std::size_t r = 0; r < t.rows(); ++r)
            if (std::isfinite(g[r]) && (!std::isfinite(g[best]) || g[r] > g[best])) best = r;
        const double f_best = t.axis[best];

        // Roots of the mismatch on a fine grid, skipping tones inside a gap.
        std::vector<double> roots;
        auto valid = [&](double f) { return !disp.in_stopband(f) && !disp.in_stopband(2.0 * f_p - f); };
        double prev_f = std::numeric_limits<double>::quiet_NaN(), prev = 0.0;
        for (double f = grid.front(); f <= grid.back(); f += 1e6) {
            if (!valid(f)) {
                prev_f = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            const double cur = phase_mismatch(f, pump, disp, spec);
            if (!std::isnan(prev_f) && (prev < 0.0) != (cur < 0.0)) {
                double lo = prev_f, hi = f, flo = prev;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = phase_mismatch(mid, pump, disp, spec);
                    if ((fm < 0.0) == (flo < 0.0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push_back(0.5 * (lo + hi));
            }
            prev_f = f;
            prev = cur;
        }
        double nearest = std::numeric_limits<double>::infinity();
        for (double r : roots)
            if (std::abs(r - f_best) < std::abs(nearest - f_best)) nearest = r;
        rep.check(std::abs(nearest - f_best) <= step,
                  fmt("pump %.2f GHz: gain maximum at %.3f GHz (%.1f dB), mismatch root at %.4f GHz "
                      "(tolerance one 20 MHz step)",
                      f_p / 1e9, f_best / 1e9, g[best], nearest / 1e9));
    }
}

void translation_identity(Reporter& rep) {
    const DeviceSpec& spec = reference_device();
    const DispersionCurve& disp = reference_dispersion();
    const PumpConfig pump = reference_pump(ModeSelection::three_mode);
    std::vector<double> grid;
    for (double f = 0.3e9; f < 1.1e9; f += 10e6) grid.push_back(f);
    GainSweepOptions o;
    o.cme = undepleted_lossless();
    o.jobs = worker_count();
    const SweepResult t = gain_sweep(pump, grid, spec, disp, o);
    const auto& gss = t.column("Gss_dB");
    const auto& gsi = t.column("Gsi_dB");
    double worst_k = 0.0, worst_w = 0.0;
    std::size_t used = 0;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        if (!std::isfinite(gss[r]) || gss[r] < 3.0) continue;
        const double f_s = t.axis[r], f_i = 2.0 * pump.frequency - f_s;
        const double g = db_to_ratio(gss[r]);
        const double by_k = ratio_to_db((g - 1.0) * disp.wavenumber(f_i) / disp.wavenumber(f_s));
        const double by_w = ratio_to_db((g - 1.0) * f_i / f_s);
        worst_k = std::max(worst_k, std::abs(gsi[r] - by_k));
        worst_w = std::max(worst_w, std::abs(gsi[r] - by_w));
        ++used;
    }
    rep.check(used >= 5 && worst_k <= 0.1,
              fmt("idler vs (G_ss - 1) k_i/k_s over %zu band points: worst %.2e dB (tolerance 0.1 dB)", used, worst_k));
    rep.note(fmt("idler vs (G_ss - 1) w_i/w_s: worst %.3f dB", worst_w));
}

void manley_rowe(Reporter& rep) {
    const DeviceSpec& spec = reference_device();
    const PumpConfig pump = reference_pump(ModeSelection::three_mode);
    ModeSet set = build_mode_set(pump, 0.66e9, reference_dispersion(), &spec);
    set.modes[set.index_of(ToneKind::signal)].amplitude = 0.02 * pump.current;
    CmeOptions o;
    o.lossless = true;
    o.tol = 1e-9;
    const CmeResult r = cme_integrate(set, spec, spec.total_length, o);
    const double kp = set.modes[0].k, ks = set.modes[1].k, ki = set.modes[2].k;
    auto flux = [&](const std::vector<cplx>& a) {
        return std::pair{std::norm(a[1]) / ks - std::norm(a[2]) / ki,
                         std::norm(a[0]) / kp + std::norm(a[1]) / ks + std::norm(a[2]) / ki};
    };
    const auto [diff0, total0] = flux(r.amplitudes.front());
    double worst_diff = 0.0, worst_total = 0.0;
    for (const auto& state : r.amplitudes) {
        const auto [diff, total] = flux(state);
        worst_diff = std::max(worst_diff, std::abs(diff - diff0) / std::abs(diff0));
        worst_total = std::max(worst_total, std::abs(total - total0) / total0);
    }
    const double depletion = 1.0 - std::norm(r.output()[0]) / std::norm(pump.current);
    rep.note(fmt("%zu steps, pump depleted by %.2f%%", r.steps, 100.0 * depletion));
    rep.check(worst_diff <= 1e-8, fmt("signal-idler flux difference: worst relative drift %.2e (tolerance 1e-8)", worst_diff));
    rep.check(worst_total <= 1e-8, fmt("total photon flux: worst relative drift %.2e (tolerance 1e-8)", worst_total));
}

void analytic_oracle(Reporter& rep) {
    const DeviceSpec& spec = reference_device();
    const PumpConfig pump = reference_pump(ModeSelection::three_mode);
    const double a0 = 1e-8;
    struct Case {
        double f_s;
        const char* regime;
    };
    for (const Case c : {Case{0.66e9, "matched"}, Case{0.62e9, "mismatched"}, Case{0.45e9, "mismatched"},
                         Case{1.0e9, "mismatched"}}) {
        ModeSet set = build_mode_set(pump, c.f_s, reference_dispersion(), &spec);
        set.modes[1].amplitude = a0;
        const CmeResult r = cme_integrate(set, spec, spec.total_length, undepleted_lossless());
        const auto& m = set.modes;
        const auto oracle = testing::two_mode_gain(m[0].k, m[1].k, m[2].k, pump.current, spec.i_star, spec.total_length);
        const double gs = std::norm(r.output()[1]) / (a0 * a0);
        const double gi = std::norm(r.output()[2]) / (a0 * a0);
        const double err = std::max(std::abs(gs - oracle.signal) / oracle.signal, std::abs(gi - oracle.idler) / oracle.idler);
        rep.check(err <= 1e-4, fmt("%s, f_s = %.2f GHz, kappa L = %.3f: G = %.4f dB, relative error %.2e (tolerance 1e-4)",
                                   c.regime, c.f_s / 1e9, oracle.kappa * spec.total_length, ratio_to_db(oracle.signal), err));
    }
}

NoiseChain reference_chain(double a_pa) {
    NoiseChain c;
    c.l1 = 0.95;
    c.l2 = 0.70;
    c.a_hemt = 50.0;
    c.omega_s = hz_to_rad(600e6);
    c.omega_i = hz_to_rad(2.5e9);
    c.a_pa_prime = a_pa - c.n_mxc_idler();
    return NoiseChain::from_idler_gain(c, 63.1);
}

void noise_round_trip(Reporter& rep) {
    for (double a_pa : {0.5, 1.0, 2.0}) {
        const NoiseResult r = analyze_chain(reference_chain(a_pa));
        rep.check(std::abs(r.a_pa - a_pa) <= 1e-6,
                  fmt("A_PA = %.1f: recovered %.12f, error %.1e photons (tolerance 1e-6)", a_pa, r.a_pa,
                      std::abs(r.a_pa - a_pa)));
    }
}

void noise_band(Reporter& rep) {
    const NoiseChain c = reference_chain(1.0);
    const UncertaintyBand band = uncertainty_band(c, 0.05);
    const NoiseResult r = analyze_chain(c);
    rep.note(fmt("Y' = %.3f, N_sys = %.3f photons, A_PA band +-%.4f photons", r.y_prime, r.n_sys, band.a_pa));
    rep.check(std::abs(band.n_sys - 0.25) <= 0.05,
              fmt("T_H +-50 mK at 600 MHz: N_sys band +-%.4f photons (expected 0.25 +- 0.05)", band.n_sys));
}

void photon_anchors(Reporter& rep) {
    const double n600 = photon_occupation(600e6, 0.012);
    const double n2500 = photon_occupation(2.5e9, 0.012);
    rep.check(std::round(n600 * 100.0) == 60.0, fmt("N(600 MHz, 12 mK) = %.5f, rounds to 0.60", n600));
    rep.check(std::round(n2500 * 100.0) == 50.0, fmt("N(2.5 GHz, 12 mK) = %.5f, rounds to 0.50", n2500));
}

void fit_recovery(Reporter& rep) {
    const fs::path fixture = fs::path(KITWPA_SOURCE_DIR) / "tests" / "fixtures" / "bandgap_vs_bias.csv";
    const CsvTable t = read_csv_file(fixture.string());
    const FitResult r = fit_bandgap_shift(t.numeric_column("I_dc_A"), t.numeric_column("f_gap_Hz"));
    const double e_star = std::abs(r.i_star - 0.89e-3) / 0.89e-3;
    const double e_quartic = std::abs(r.i_quartic - 0.86e-3) / 0.86e-3;
    rep.check(r.converged && e_star <= 0.05,
              fmt("bias fixture: I* = %.4f mA vs 0.89 mA, off by %.2f%% (tolerance 5%%)", r.i_star * 1e3, 100.0 * e_star));
    rep.check(r.quartic_constrained && e_quartic <= 0.05,
              fmt("bias fixture: I4 = %.4f mA vs 0.86 mA, off by %.2f%% (tolerance 5%%)", r.i_quartic * 1e3,
                  100.0 * e_quartic));

    const double i_star = 0.89e-3, i_quartic = 0.86e-3, f0 = 2.0e9;
    std::vector<double> current, freq;
    for (int j = 0; j <= 9; ++j) {
        current.push_back(0.05e-3 * j);
        freq.push_back(f0 * (1.0 + bandgap_shift(current.back(), i_star, i_quartic)));
    }
    const FitResult clean = fit_bandgap_shift(current, freq);
    const double worst = std::max({std::abs(clean.i_star - i_star) / i_star,
                                   std::abs(clean.i_quartic - i_quartic) / i_quartic, std::abs(clean.f0 - f0) / f0});
    rep.check(worst <= 5e-7, fmt("noiseless synthetic data: worst relative error %.2e (tolerance 5e-7, six digits)", worst));
}

void compression_properties(Reporter& rep) {
    const DeviceSpec& spec = reference_device();
    const DispersionCurve& disp = reference_dispersion();
    CmeOptions o;
    o.record_trajectory = false;

    const std::vector<double> small = {-130.0, -125.0, -120.0, -115.0, -110.0};
    const SweepResult tt = two_tone_spectrum(0.675e9, 0.655e9, small, reference_pump(ModeSelection::two_tone), spec, disp,
                                             o, worker_count());
    for (const char* imd : {"P_imd_2f1-f2_dBm", "P_imd_2f2-f1_dBm"}) {
        const Ip3Result r = ip3(tt.axis, tt.column("P_tone1_dBm"), tt.column(imd));
        rep.check(std::abs(r.intermod_slope - 3.0) <= 0.1,
                  fmt("%s small-signal slope %.4f dB/dB (expected 3.0 +- 0.1)", imd, r.intermod_slope));
    }

    std::vector<double> pin;
    // Beyond about -50 dBm the signal outgrows the pump and energy flows back.
    for (double p = -110.0; p <= -55.0 + 1e-9; p += 2.5) pin.push_back(p);
    const PumpConfig pump = reference_pump(ModeSelection::six_mode);
    const SweepResult cs = compression_sweep(0.66e9, pin, pump, spec, disp, o, worker_count());
    const auto& gain = cs.column("Gain_dB");
    bool monotone = true;
    for (std::size_t j = 1; j < gain.size(); ++j) monotone = monotone && gain[j] < gain[j - 1];
    rep.check(monotone, fmt("six-mode gain at 0.66 GHz falls monotonically from %.2f dB to %.2f dB over -110..-55 dBm",
                            gain.front(), gain.back()));

    // Absolute anchors are advisory only.
    const auto p1 = p1db(cs.axis, cs.column("Pout_dBm"));
    if (p1)
        rep.note(fmt("advisory: P1dB %.1f dBm vs -71.1 dBm (+-5 dB) %s", *p1,
                     std::abs(*p1 + 71.1) <= 5.0 ? "within" : "outside"));
    else
        rep.note("advisory: no 1 dB compression within the sweep");
    std::vector<double> wide;
    for (double p = -120.0; p <= -80.0 + 1e-9; p += 5.0) wide.push_back(p);
    const SweepResult tw = two_tone_spectrum(0.675e9, 0.655e9, wide, reference_pump(ModeSelection::two_tone), spec, disp,
                                             o, worker_count());
    try {
        const Ip3Result r = ip3(tw.axis, tw.column("P_tone1_dBm"), tw.column("P_imd_2f1-f2_dBm"));
        rep.note(fmt("advisory: IIP3 %.1f dBm vs -59.4 dBm (+-5 dB) %s", r.iip3_dbm,
                     std::abs(r.iip3_dbm + 59.4) <= 5.0 ? "within" : "outside"));
    } catch (const std::exception& e) {
        rep.note(std::string("advisory: IIP3 not extracted: ") + e.what());
    }
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void determinism(Reporter& rep) {
    const fs::path root = fs::temp_directory_path() / "kitwpa_acceptance_determinism";
    fs::remove_all(root);
    const std::string device =
        "seed = 9\n"
        "[device]\npreset = reference\ncalibrate_center = 2 GHz\nloss = two_band\n"
        "[pump]\nfrequency = 1.6 GHz\ncurrent_ratio = 0.117\nmodes = 6-mode\n"
        "[signal]\nfrequency = 660 MHz\npower = -110 dBm\n"
        "[two_tone]\nf1 = 675 MHz\nf2 = 655 MHz\n";
    const std::string noise =
        "seed = 9\n[noise]\ng_ii = 63.1\na_pa = 1.0\npump_frequency = 1.55 GHz\n"
        "signal_start = 500 MHz\nsignal_stop = 700 MHz\nsignal_count = 5\n";
    struct Job {
        std::string sub;
        std::string kind;
        std::string config;
        std::string input;
    };
    const std::vector<Job> jobs = {
        {"dispersion", "", device + "[sweep]\nstart = 0\nstop = 6 GHz\ncount = 300\n", ""},
        {"stopband", "", device + "[sweep]\nstart = 0\nstop = 6 GHz\ncount = 300\n", ""},
        {"gain", "", device + "[sweep]\nstart = 400 MHz\nstop = 900 MHz\ncount = 6\n", ""},
        {"spectrum", "", device, ""},
        {"two-tone", "", device + "[sweep]\nstart = -120 dBm\nstop = -110 dBm\ncount = 3\n", ""},
        {"compression", "", device + "[sweep]\nstart = -100 dBm\nstop = -60 dBm\ncount = 5\n", ""},
        {"noise-forward", "", noise, ""},
        {"synth", "noise-traces", noise + "[synth]\nnoise_fraction = 0.01\n", ""},
        {"noise-invert", "", noise, "synth-noise-traces.csv"},
        {"synth", "bandgap-data",
         "seed = 9\n[synth]\ni_star = 0.89 mA\ni_quartic = 0.86 mA\nf0 = 2 GHz\nnoise_fraction = 0.001\n"
         "[sweep]\nstart = 0 mA\nstop = 0.45 mA\ncount = 10\n",
         ""},
        {"fit-bandgap", "", "seed = 9\n", "synth-bandgap-data.csv"},
        {"synth", "power-sweep", "seed = 9\n[synth]\nnoise_db = 0.05\n[sweep]\nstart = -110 dBm\nstop = -50 dBm\ncount = 61\n",
         ""},
    };
    for (const auto& job : jobs) {
        const std::string label = job.kind.empty() ? job.sub : job.sub + " " + job.kind;
        std::vector<std::string> first;
        bool ran = true, same = true;
        for (int pass = 0; pass < 2 && ran; ++pass) {
            RunRequest r;
            r.subcommand = job.sub;
            r.kind = job.kind;
            r.output_dir = (root / ("run" + std::to_string(pass))).string();
            r.jobs = pass == 0 ? 1 : worker_count();
            if (!job.input.empty()) r.inputs = {(root / "run0" / job.input).string()};
            const RunOutcome o = run_with_config(r, job.config);
            if (o.status != exit_code::ok) {
                rep.check(false, label + ": run failed with status " + std::to_string(o.status) + " " + o.error_json);
                ran = false;
                break;
            }
            for (std::size_t k = 0; k < o.files.size(); ++k) {
                const std::string text = slurp(o.files[k]);
                const std::string data = o.files[k].ends_with(".csv") ? data_section(text) : text;
                if (pass == 0)
                    first.push_back(data);
                else
                    same = same && k < first.size() && first[k] == data;
            }
        }
        if (ran) rep.check(same, label + ": byte-identical data across two runs (1 and " +
                                     std::to_string(worker_count()) + " workers)");
    }
    fs::remove_all(root);
}

const std::vector<std::pair<std::string, std::function<void(Reporter&)>>>& criteria() {
    static const std::vector<std::pair<std::string, std::function<void(Reporter&)>>> all = {
        {"1", stop_band},           {"2", gain_reproduction},  {"3", phase_matching},
        {"4", translation_identity}, {"5", manley_rowe},        {"6", analytic_oracle},
        {"7a", noise_round_trip},   {"7b", noise_band},        {"8", photon_anchors},
        {"9", fit_recovery},        {"10", compression_properties}, {"11", determinism},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> wanted(argv + 1, argv + argc);
    if (wanted.empty())
        for (const auto& [id, fn] : criteria()) wanted.push_back(id);
    bool ok = true;
    for (const auto& id : wanted) {
        const auto it = std::find_if(criteria().begin(), criteria().end(), [&](const auto& c) { return c.first == id; });
        if (it == criteria().end()) {
            std::fprintf(stderr, "unknown criterion '%s'\n", id.c_str());
            return 2;
        }
        Reporter rep{id};
        try {
            it->second(rep);
        } catch (const std::exception& e) {
            rep.check(false, std::string("threw: ") + e.what());
        }
        ok = ok && rep.ok;
    }
    return ok ? 0 : 1;
}
