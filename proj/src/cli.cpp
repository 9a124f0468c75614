#include "kitwpa/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "kitwpa/errors.hpp"
#include "kitwpa/extract.hpp"
#include "kitwpa/rng.hpp"
#include "kitwpa/table.hpp"

namespace kitwpa {

namespace {

using ordered_json = nlohmann::ordered_json;
constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

const std::set<std::string> root_keys = {"seed"};
const std::set<std::string> device_keys = {
    "preset", "line_impedance", "line_velocity", "stub_impedance", "stub_velocity", "stub_base_length",
    "stub_mod_amplitude", "stub_mod_period", "cell_pitch", "stubs_per_node", "total_length", "i_star",
    "i_quartic", "conductor_width", "conductor_thickness", "loss", "loss_signal_db", "loss_idler_db",
    "calibrate_center", "min_stub_resonance", "i_dc", "search_start", "search_stop", "dispersion_points"};
const std::set<std::string> material_keys = {"gap_parameter_ev", "penetration_depth", "single_spin_dos",
                                             "kappa_star", "transition_temperature"};
const std::set<std::string> pump_keys = {"frequency", "current", "current_ratio", "power", "modes"};
const std::set<std::string> cme_keys = {"tol", "undepleted", "lossless", "seed_dbm"};
const std::set<std::string> signal_keys = {"frequency", "power"};
const std::set<std::string> two_tone_keys = {"f1", "f2"};
const std::set<std::string> noise_keys = {"t_hot", "t_cold", "t_mxc", "l1", "l2", "g_ii", "g_ii_db", "g_si",
                                          "a_pa", "a_pa_prime", "a_hemt", "g_hemt", "a_r", "g_r", "bandwidth",
                                          "pump_frequency", "signal_frequency", "signal_start", "signal_stop",
                                          "signal_count", "delta_t_hot", "smooth_window"};
const std::set<std::string> sweep_keys = {"axis", "start", "stop", "count", "scale"};
const std::set<std::string> output_keys = {"directory", "format"};
const std::set<std::string> fit_keys = {"f0"};
const std::set<std::string> synth_keys = {"noise_fraction", "i_star", "i_quartic", "f0", "g0_db",
                                          "p_compress_dbm", "noise_db"};

void check_known_keys(const Config& cfg) {
    static const std::set<std::string> known_sections = {"",      "device", "material", "pump",   "cme",  "signal",
                                                         "two_tone", "noise", "sweep",  "output", "fit", "synth"};
    for (const auto& name : cfg.sections())
        if (!known_sections.count(name)) throw ConfigError("unknown section [" + name + "]");
    cfg.require_known("", root_keys);
    cfg.require_known("device", device_keys);
    cfg.require_known("material", material_keys);
    cfg.require_known("pump", pump_keys);
    cfg.require_known("cme", cme_keys);
    cfg.require_known("signal", signal_keys);
    cfg.require_known("two_tone", two_tone_keys);
    cfg.require_known("noise", noise_keys);
    cfg.require_known("sweep", sweep_keys);
    cfg.require_known("output", output_keys);
    cfg.require_known("fit", fit_keys);
    cfg.require_known("synth", synth_keys);
}

// Power-axis values are dBm; a bare number is already dBm.
double parse_dbm(const std::string& text) {
    std::string s = text;
    const auto pos = s.find("dBm");
    if (pos != std::string::npos) s.erase(pos);
    try {
        return parse_quantity(s, Dimension::none);
    } catch (const ConfigError&) {
        return watt_to_dbm(parse_quantity(text, Dimension::power));
    }
}

double dbm_value(const Config& cfg, const std::string& section, const std::string& key) {
    try {
        return parse_dbm(cfg.get_string(section, key));
    } catch (const ConfigError& e) {
        throw ConfigError("[" + section + "] " + key + ": " + e.what());
    }
}

// ---------------------------------------------------------------- outputs

struct Context {
    const Config& cfg;
    const RunRequest& request;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
    std::string format;
    std::vector<std::string> files;

    [[nodiscard]] std::vector<std::pair<std::string, std::string>> provenance() const {
        return {{"tool", std::string("kitwpa ") + tool_version},
                {"subcommand", request.subcommand == "synth" ? "synth " + request.kind : request.subcommand},
                {"config_hash", config_hash},
                {"seed", std::to_string(seed)}};
    }

    void write(const std::string& name, const std::string& content) {
        std::filesystem::create_directories(out_dir);
        const auto path = out_dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write output file '" + path.string() + "'");
        out << content;
        files.push_back(path.string());
    }

    void write_table(const std::string& stem, SweepResult table,
                     const std::vector<std::pair<std::string, std::string>>& extra = {}) {
        auto prov = provenance();
        prov.insert(prov.end(), extra.begin(), extra.end());
        table.provenance = std::move(prov);
        if (format == "json")
            write(stem + ".json", to_json(table));
        else
            write(stem + ".csv", to_csv(table));
    }

    void write_json(const std::string& stem, const ordered_json& data) {
        ordered_json doc;
        ordered_json prov = ordered_json::object();
        for (const auto& [k, v] : provenance()) prov[k] = v;
        doc["provenance"] = prov;
        doc["result"] = data;
        write(stem + ".json", doc.dump(1) + "\n");
    }
};

ordered_json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

// ---------------------------------------------------------------- builders

DispersionCurve dispersion_for_pump(const DeviceSpec& spec, const Config& cfg, double f_top) {
    const double f_max = std::max(f_top, cfg.get("device", "search_stop", Dimension::frequency, 3e9));
    const auto default_points = static_cast<long long>(std::ceil(f_max / 1e6)) + 1;
    const long long points = cfg.get_int("device", "dispersion_points", default_points);
    if (points < 16) throw ConfigError("[device] dispersion_points must be at least 16");
    const auto grid = linear_grid(0.0, f_max, static_cast<std::size_t>(points));
    return bloch_dispersion(spec, grid);
}

CmeOptions cme_from_config(const Config& cfg) {
    CmeOptions o;
    o.tol = cfg.get("cme", "tol", Dimension::none, 1e-9);
    o.undepleted = cfg.get_bool("cme", "undepleted", false);
    o.lossless = cfg.get_bool("cme", "lossless", false);
    o.record_trajectory = false;
    return o;
}

double top_frequency(const PumpConfig& pump) { return 4.2 * pump.frequency; }

void require_inputs(const RunRequest& request, std::size_t n) {
    if (request.inputs.size() < n)
        throw MissingInputError("subcommand '" + request.subcommand + "' needs " + std::to_string(n) + " input file(s)");
}

// ---------------------------------------------------------------- subcommands

void cmd_dispersion(Context& ctx) {
    const Config& cfg = ctx.cfg;
    cfg.require_section("sweep");
    const DeviceSpec spec = device_from_config(cfg);
    const auto grid = sweep_axis_from_config(cfg, Dimension::frequency);
    DispersionCurve curve = bloch_dispersion(spec, grid);
    const double i_dc = cfg.get("device", "i_dc", Dimension::current, 0.0);
    if (i_dc != 0.0) curve = biased_dispersion(spec, curve, i_dc);

    SweepResult t;
    t.axis_label = "f_Hz";
    t.axis = curve.frequency;
    std::vector<double> re_k, im_k, re_z, im_z;
    for (std::size_t j = 0; j < curve.size(); ++j) {
        re_k.push_back(curve.bloch_k[j].real());
        im_k.push_back(curve.bloch_k[j].imag());
        re_z.push_back(curve.bloch_impedance[j].real());
        im_z.push_back(curve.bloch_impedance[j].imag());
    }
    t.add_column("re_k_rad_per_m", std::move(re_k));
    t.add_column("im_k_rad_per_m", std::move(im_k));
    t.add_column("delta_k_rad_per_m", curve.delta_k);
    t.add_column("re_Zb_ohm", std::move(re_z));
    t.add_column("im_Zb_ohm", std::move(im_z));
    ctx.write_table("dispersion", std::move(t), {{"reference_velocity_m_per_s", format_double(curve.reference_velocity)}});

    SweepResult bands;
    bands.axis_label = "center_Hz";
    std::vector<double> lower, upper, width;
    for (const auto& b : curve.stopbands) {
        bands.axis.push_back(b.center);
        lower.push_back(b.lower);
        upper.push_back(b.upper);
        width.push_back(b.width());
    }
    bands.add_column("lower_Hz", std::move(lower));
    bands.add_column("upper_Hz", std::move(upper));
    bands.add_column("width_Hz", std::move(width));
    ctx.write_table("stopbands", std::move(bands));
}

void cmd_stopband(Context& ctx) {
    const Config& cfg = ctx.cfg;
    const DeviceSpec spec = device_from_config(cfg);
    const double lo = cfg.get("device", "search_start", Dimension::frequency, 0.5e9);
    const double hi = cfg.get("device", "search_stop", Dimension::frequency, 3e9);
    if (!(hi > lo && lo >= 0.0)) throw ConfigError("[device] search range is empty");
    const long long points = cfg.get_int("device", "dispersion_points", 4001);
    if (points < 16) throw ConfigError("[device] dispersion_points must be at least 16");
    DispersionCurve curve = bloch_dispersion(spec, linear_grid(0.0, hi, static_cast<std::size_t>(points)));
    const double i_dc = cfg.get("device", "i_dc", Dimension::current, 0.0);
    if (i_dc != 0.0) curve = biased_dispersion(spec, curve, i_dc);
    const auto band = find_stopband(curve, lo, hi);
    SweepResult t;
    t.axis_label = "center_Hz";
    std::vector<double> lower, upper, width;
    if (band) {
        t.axis.push_back(band->center);
        lower.push_back(band->lower);
        upper.push_back(band->upper);
        width.push_back(band->width());
    }
    t.add_column("lower_Hz", std::move(lower));
    t.add_column("upper_Hz", std::move(upper));
    t.add_column("width_Hz", std::move(width));
    ctx.write_table("stopband", std::move(t));
}

void cmd_gain(Context& ctx) {
    const Config& cfg = ctx.cfg;
    cfg.require_section("pump");
    cfg.require_section("sweep");
    const DeviceSpec spec = device_from_config(cfg);
    const PumpConfig pump = pump_from_config(cfg, spec);
    const auto grid = sweep_axis_from_config(cfg, Dimension::frequency);
    const double top = std::max(top_frequency(pump), 2.0 * pump.frequency + grid.back());
    const DispersionCurve disp = dispersion_for_pump(spec, cfg, top);
    GainSweepOptions o;
    o.cme = cme_from_config(cfg);
    o.seed_dbm = cfg.has("cme", "seed_dbm") ? dbm_value(cfg, "cme", "seed_dbm") : -110.0;
    o.jobs = ctx.request.jobs;
    ctx.write_table("gain", gain_sweep(pump, grid, spec, disp, o));
}

void write_spectrum(Context& ctx, const std::vector<ToneOutput>& tones) {
    if (ctx.format == "json") {
        ordered_json rows = ordered_json::array();
        for (const auto& t : tones)
            rows.push_back({{"label", t.name}, {"f_Hz", t.frequency}, {"Pout_dBm", number_or_null(t.power_dbm)}});
        ctx.write_json("spectrum", rows);
        return;
    }
    std::ostringstream out;
    for (const auto& [k, v] : ctx.provenance()) out << "# " << k << " = " << v << '\n';
    out << "label,f_Hz,Pout_dBm\n";
    for (const auto& t : tones) out << t.name << ',' << format_double(t.frequency) << ',' << format_double(t.power_dbm) << '\n';
    ctx.write("spectrum.csv", out.str());
}

void cmd_spectrum(Context& ctx) {
    const Config& cfg = ctx.cfg;
    cfg.require_section("pump");
    cfg.require_section("signal");
    const DeviceSpec spec = device_from_config(cfg);
    const PumpConfig pump = pump_from_config(cfg, spec);
    const double f_s = cfg.get("signal", "frequency", Dimension::frequency);
    const double p_s = cfg.has("signal", "power") ? dbm_value(cfg, "signal", "power")
                                                  : -std::numeric_limits<double>::infinity();
    const DispersionCurve disp = dispersion_for_pump(spec, cfg, top_frequency(pump));
    write_spectrum(ctx, output_spectrum(pump, f_s, p_s, spec, disp, cme_from_config(cfg)));
}

std::vector<double> power_axis(const Config& cfg) {
    cfg.require_section("sweep");
    return sweep_axis_from_config(cfg, Dimension::power);
}

ordered_json ip3_summary(const std::vector<double>& pin, const std::vector<double>& fund,
                         const std::vector<double>& imd) {
    try {
        const Ip3Result r = ip3(pin, fund, imd);
        return {{"iip3_dBm", r.iip3_dbm},
                {"fundamental_slope", r.fundamental_slope},
                {"intermod_slope", r.intermod_slope},
                {"points_used", r.points_used}};
    } catch (const Error& e) {
        return {{"error", e.what()}};
    }
}

void cmd_two_tone(Context& ctx) {
    const Config& cfg = ctx.cfg;
    cfg.require_section("pump");
    cfg.require_section("two_tone");
    const DeviceSpec spec = device_from_config(cfg);
    const PumpConfig pump = pump_from_config(cfg, spec);
    const double f1 = cfg.get("two_tone", "f1", Dimension::frequency);
    const double f2 = cfg.get("two_tone", "f2", Dimension::frequency);
    const auto pin = power_axis(cfg);
    const double top = std::max(top_frequency(pump), 2.0 * pump.frequency + std::max(f1, f2));
    const DispersionCurve disp = dispersion_for_pump(spec, cfg, top);
    SweepResult table = two_tone_spectrum(f1, f2, pin, pump, spec, disp, cme_from_config(cfg), ctx.request.jobs);
    ordered_json summary;
    summary["tone1"] = ip3_summary(table.axis, table.column("P_tone1_dBm"), table.column("P_imd_2f1-f2_dBm"));
    summary["tone2"] = ip3_summary(table.axis, table.column("P_tone2_dBm"), table.column("P_imd_2f2-f1_dBm"));
    summary["advisory_anchor"] = {{"iip3_dBm", -59.4}, {"tolerance_dB", 5.0}};
    ctx.write_table("two-tone", std::move(table));
    ctx.write_json("two-tone_ip3", summary);
}

ordered_json p1db_summary(const std::vector<double>& pin, const std::vector<double>& pout) {
    ordered_json s;
    try {
        const auto p = p1db(pin, pout);
        s["p1db_dBm"] = p ? ordered_json(*p) : ordered_json(nullptr);
        s["found"] = p.has_value();
    } catch (const Error& e) {
        s["error"] = e.what();
    }
    s["advisory_anchor"] = {{"p1db_dBm", -71.1}, {"tolerance_dB", 5.0}};
    return s;
}

void cmd_compression(Context& ctx) {
    const Config& cfg = ctx.cfg;
    if (!ctx.request.inputs.empty()) {
        const CsvTable in = read_csv_file(ctx.request.inputs.front());
        const auto pin = in.numeric_column("Pin_dBm");
        const auto pout = in.numeric_column("Pout_dBm");
        ctx.write_json("compression_p1db", p1db_summary(pin, pout));
        return;
    }
    cfg.require_section("pump");
    cfg.require_section("signal");
    const DeviceSpec spec = device_from_config(cfg);
    const PumpConfig pump = pump_from_config(cfg, spec);
    const double f_s = cfg.get("signal", "frequency", Dimension::frequency);
    const auto pin = power_axis(cfg);
    const DispersionCurve disp = dispersion_for_pump(spec, cfg, top_frequency(pump));
    SweepResult table = compression_sweep(f_s, pin, pump, spec, disp, cme_from_config(cfg), ctx.request.jobs);
    std::vector<double> ok_in, ok_out;
    for (std::size_t r = 0; r < table.rows(); ++r)
        if (table.status[r] == "ok" || table.status[r] == "warn_validity") {
            ok_in.push_back(table.axis[r]);
            ok_out.push_back(table.column("Pout_dBm")[r]);
        }
    const ordered_json summary = p1db_summary(ok_in, ok_out);
    ctx.write_table("compression", std::move(table));
    ctx.write_json("compression_p1db", summary);
}

// Chain at one signal frequency with the idler fixed by the pump.
NoiseChain chain_at(const Config& cfg, double f_s) {
    NoiseChain c = noise_chain_from_config(cfg);
    const double f_p = cfg.get("noise", "pump_frequency", Dimension::frequency);
    const double f_i = 2.0 * f_p - f_s;
    if (!(f_s > 0.0 && f_i > 0.0)) throw ConfigError("[noise] signal frequency must lie in (0, 2 f_p)");
    c.omega_s = hz_to_rad(f_s);
    c.omega_i = hz_to_rad(f_i);
    if (cfg.has("noise", "g_ii") || cfg.has("noise", "g_ii_db")) {
        const double g_ii = cfg.has("noise", "g_ii") ? cfg.get("noise", "g_ii", Dimension::none)
                                                     : db_to_ratio(cfg.get("noise", "g_ii_db", Dimension::none));
        if (cfg.has("noise", "g_si"))
            c.g_ii = g_ii;
        else
            c = NoiseChain::from_idler_gain(c, g_ii);
    } else if (!cfg.has("noise", "g_si")) {
        throw ConfigError("[noise] needs g_ii, g_ii_db or g_si");
    }
    if (cfg.has("noise", "a_pa")) {
        if (cfg.has("noise", "a_pa_prime")) throw ConfigError("[noise] give a_pa or a_pa_prime, not both");
        c.a_pa_prime = cfg.get("noise", "a_pa", Dimension::none) - c.n_mxc_idler();
    }
    c.validate();
    return c;
}

std::vector<double> signal_frequencies(const Config& cfg) {
    if (!cfg.has("noise", "signal_start")) return {cfg.get("noise", "signal_frequency", Dimension::frequency)};
    const double start = cfg.get("noise", "signal_start", Dimension::frequency);
    const double stop = cfg.get("noise", "signal_stop", Dimension::frequency);
    const long long count = cfg.get_int("noise", "signal_count", 0);
    if (count < 1) throw ConfigError("[noise] signal_count must be at least 1");
    if (count > 1 && !(stop > start)) throw ConfigError("[noise] signal range is empty: stop must exceed start");
    if (count == 1) return {start};
    return linear_grid(start, stop, static_cast<std::size_t>(count));
}

struct Traces {
    std::vector<double> f_idler, hot, cold, off;
};

Traces forward_traces(const Config& cfg, const std::vector<double>& f_signal) {
    Traces t;
    for (double f_s : f_signal) {
        const NoiseChain c = chain_at(cfg, f_s);
        t.f_idler.push_back(rad_to_hz(c.omega_i));
        t.hot.push_back(forward_chain_power(c, Load::hot));
        t.cold.push_back(forward_chain_power(c, Load::cold));
        t.off.push_back(forward_chain_power(c, Load::pump_off));
    }
    return t;
}

SweepResult traces_table(const Traces& t) {
    SweepResult table;
    table.axis_label = "f_Hz";
    table.axis = t.f_idler;
    auto to_dbm = [](const std::vector<double>& w) {
        std::vector<double> d;
        for (double v : w) d.push_back(watt_to_dbm(v));
        return d;
    };
    table.add_column("P_hot_dBm", to_dbm(t.hot));
    table.add_column("P_cold_dBm", to_dbm(t.cold));
    table.add_column("P_off_dBm", to_dbm(t.off));
    return table;
}

void cmd_noise_forward(Context& ctx) {
    const Config& cfg = ctx.cfg;
    cfg.require_section("noise");
    const auto f_signal = signal_frequencies(cfg);
    const Traces tr = forward_traces(cfg, f_signal);
    SweepResult table = traces_table(tr);
    const double dt = cfg.get("noise", "delta_t_hot", Dimension::temperature, 0.05);
    std::vector<double> y, yp, nsys, apa, err;
    for (double f_s : f_signal) {
        const NoiseChain c = chain_at(cfg, f_s);
        const NoiseResult r = analyze_chain(c);
        y.push_back(r.y);
        yp.push_back(r.y_prime);
        nsys.push_back(r.n_sys);
        apa.push_back(r.a_pa);
        err.push_back(uncertainty_band(c, dt).n_sys);
    }
    table.add_column("Y", std::move(y));
    table.add_column("Yprime", std::move(yp));
    table.add_column("Nsys_photons", std::move(nsys));
    table.add_column("Apa_photons", std::move(apa));
    table.add_column("err_photons", std::move(err));
    ctx.write_table("noise-forward", std::move(table));
}

InversionSetup inversion_setup(const Config& cfg) {
    InversionSetup s;
    s.t_hot = cfg.get("noise", "t_hot", Dimension::temperature, s.t_hot);
    s.t_cold = cfg.get("noise", "t_cold", Dimension::temperature, s.t_cold);
    s.t_mxc = cfg.get("noise", "t_mxc", Dimension::temperature, s.t_mxc);
    s.l1 = cfg.get("noise", "l1", Dimension::none, s.l1);
    s.pump_frequency = cfg.get("noise", "pump_frequency", Dimension::frequency);
    s.delta_t_hot = cfg.get("noise", "delta_t_hot", Dimension::temperature, s.delta_t_hot);
    return s;
}

void cmd_noise_invert(Context& ctx) {
    const Config& cfg = ctx.cfg;
    cfg.require_section("noise");
    require_inputs(ctx.request, 1);
    const CsvTable in = read_csv_file(ctx.request.inputs.front());
    const auto f = in.numeric_column("f_Hz");
    const auto hot = in.numeric_column("P_hot_dBm");
    const auto cold = in.numeric_column("P_cold_dBm");
    const auto off = in.numeric_column("P_off_dBm");
    SweepResult table = invert_traces(f, hot, cold, off, inversion_setup(cfg));
    const long long window = cfg.get_int("noise", "smooth_window", 0);
    if (window > 0) {
        if (window % 2 == 0) throw ConfigError("[noise] smooth_window must be odd");
        table.add_column("Nsys_smoothed", smooth(table.column("Nsys_photons"), static_cast<std::size_t>(window)));
        table.add_column("Apa_smoothed", smooth(table.column("Apa_photons"), static_cast<std::size_t>(window)));
    }
    ctx.write_table("noise-invert", std::move(table));
}

ordered_json fit_to_json(const FitResult& r) {
    return {{"i_star_A", r.i_star},
            {"i_quartic_A", number_or_null(r.i_quartic)},
            {"f0_Hz", r.f0},
            {"i_star_sigma_A", r.i_star_sigma()},
            {"i_quartic_sigma_A", r.quartic_constrained ? ordered_json(r.i_quartic_sigma()) : ordered_json(nullptr)},
            {"f0_sigma_Hz", r.f0_sigma},
            {"covariance_A2", {{r.covariance[0][0], r.covariance[0][1]}, {r.covariance[1][0], r.covariance[1][1]}}},
            {"residual_norm_Hz", r.residual_norm},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"quartic_constrained", r.quartic_constrained},
            {"span_adequate", r.span_adequate}};
}

void cmd_fit_bandgap(Context& ctx) {
    require_inputs(ctx.request, 1);
    const CsvTable in = read_csv_file(ctx.request.inputs.front());
    const auto current = in.numeric_column("I_dc_A");
    const auto freq = in.numeric_column("f_gap_Hz");
    BandgapFitOptions o;
    o.f0 = ctx.cfg.find("fit", "f0", Dimension::frequency);
    ctx.write_json("fit-bandgap", fit_to_json(fit_bandgap_shift(current, freq, o)));
}

// ---------------------------------------------------------------- synth

void synth_noise_traces(Context& ctx) {
    const Config& cfg = ctx.cfg;
    cfg.require_section("noise");
    const double sigma = cfg.get("synth", "noise_fraction", Dimension::none, 0.0);
    if (!(sigma >= 0.0)) throw ConfigError("[synth] noise_fraction must be non-negative");
    Traces tr = forward_traces(cfg, signal_frequencies(cfg));
    PortableNormal rng(ctx.seed);
    // Multiplicative perturbation in linear power, as a radiometer averages.
    for (std::size_t i = 0; i < tr.f_idler.size(); ++i) {
        tr.hot[i] *= 1.0 + sigma * rng.normal();
        tr.cold[i] *= 1.0 + sigma * rng.normal();
        tr.off[i] *= 1.0 + sigma * rng.normal();
    }
    std::vector<std::pair<std::string, std::string>> truth;
    const NoiseChain c = chain_at(cfg, signal_frequencies(cfg).front());
    truth.emplace_back("truth.a_pa_photons", format_double(c.a_pa_prime + c.n_mxc_idler()));
    truth.emplace_back("truth.g_ii", format_double(c.idler_gain()));
    truth.emplace_back("truth.noise_fraction", format_double(sigma));
    ctx.write_table("synth-noise-traces", traces_table(tr), truth);
}

void synth_bandgap_data(Context& ctx) {
    const Config& cfg = ctx.cfg;
    cfg.require_section("synth");
    const double i_star = cfg.get("synth", "i_star", Dimension::current);
    const double i_quartic = cfg.get("synth", "i_quartic", Dimension::current);
    const double f0 = cfg.get("synth", "f0", Dimension::frequency);
    const double sigma = cfg.get("synth", "noise_fraction", Dimension::none, 0.0);
    if (!(sigma >= 0.0)) throw ConfigError("[synth] noise_fraction must be non-negative");
    std::vector<double> current = cfg.has_section("sweep") ? sweep_axis_from_config(cfg, Dimension::current)
                                                           : linear_grid(0.0, 0.45e-3, 10);
    double i_max = 0.0;
    for (double i : current) i_max = std::max(i_max, std::abs(i));
    // Noise is relative to the largest shift in the set so each point sees
    // the same absolute scatter.
    const double scale = sigma * f0 * std::abs(bandgap_shift(i_max, i_star, i_quartic));
    PortableNormal rng(ctx.seed);
    std::vector<double> freq;
    for (double i : current) freq.push_back(f0 * (1.0 + bandgap_shift(i, i_star, i_quartic)) + scale * rng.normal());
    SweepResult t;
    t.axis_label = "I_dc_A";
    t.axis = std::move(current);
    t.add_column("f_gap_Hz", std::move(freq));
    ctx.write_table("synth-bandgap-data", std::move(t),
                    {{"truth.i_star_A", format_double(i_star)},
                     {"truth.i_quartic_A", format_double(i_quartic)},
                     {"truth.f0_Hz", format_double(f0)},
                     {"truth.noise_sigma_Hz", format_double(scale)}});
}

void synth_power_sweep(Context& ctx) {
    const Config& cfg = ctx.cfg;
    cfg.require_section("synth");
    const double g0 = cfg.get("synth", "g0_db", Dimension::none, 20.0);
    const double pc = cfg.has("synth", "p_compress_dbm") ? dbm_value(cfg, "synth", "p_compress_dbm") : -65.0;
    const double noise_db = cfg.get("synth", "noise_db", Dimension::none, 0.0);
    if (!(noise_db >= 0.0)) throw ConfigError("[synth] noise_db must be non-negative");
    const auto pin = power_axis(cfg);
    PortableNormal rng(ctx.seed);
    std::vector<double> pout;
    for (double p : pin)
        pout.push_back(p + g0 - 10.0 * std::log10(1.0 + std::pow(10.0, (p - pc) / 10.0)) + noise_db * rng.normal());
    SweepResult t;
    t.axis_label = "Pin_dBm";
    t.axis = pin;
    t.add_column("Pout_dBm", std::move(pout));
    const double truth_p1db = pc + 10.0 * std::log10(std::pow(10.0, 0.1) - 1.0);
    ctx.write_table("synth-power-sweep", std::move(t),
                    {{"truth.g0_dB", format_double(g0)},
                     {"truth.p_compress_dBm", format_double(pc)},
                     {"truth.p1db_dBm", format_double(truth_p1db)}});
}

// ---------------------------------------------------------------- dispatch

struct Classified {
    int status;
    std::string kind;
};

Classified classify(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return {exit_code::config, "config_error"};
    if (dynamic_cast<const InvalidArgument*>(&e)) return {exit_code::config, "invalid_argument"};
    if (dynamic_cast<const MissingInputError*>(&e)) return {exit_code::missing_input, "missing_input"};
    if (dynamic_cast<const SchemaError*>(&e)) return {exit_code::schema, "schema_error"};
    if (dynamic_cast<const ModeInGapError*>(&e)) return {exit_code::numerical, "mode_in_gap"};
    if (dynamic_cast<const StiffnessError*>(&e)) return {exit_code::numerical, "stiffness"};
    if (dynamic_cast<const OutOfModelError*>(&e)) return {exit_code::numerical, "out_of_model"};
    if (dynamic_cast<const ConvergenceError*>(&e)) return {exit_code::numerical, "convergence"};
    if (dynamic_cast<const Error*>(&e)) return {exit_code::numerical, "model_error"};
    return {exit_code::internal, "internal"};
}

std::string error_record(int status, const std::string& kind, const std::string& message) {
    ordered_json j;
    j["status"] = status;
    j["error"] = kind;
    j["message"] = message;
    return j.dump();
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"dispersion",    "stopband",     "gain",
                                                   "spectrum",      "two-tone",     "noise-forward",
                                                   "noise-invert",  "fit-bandgap",  "compression"};
    return names;
}

const std::vector<std::string>& synth_kinds() {
    static const std::vector<std::string> names = {"noise-traces", "bandgap-data", "power-sweep"};
    return names;
}

DeviceSpec device_from_config(const Config& cfg) {
    cfg.require_section("device");
    const std::string preset = cfg.get_string("device", "preset", "none");
    DeviceSpec spec;
    if (preset == "reference") {
        spec = reference_geometry();
    } else if (preset != "none") {
        throw ConfigError("[device] preset must be 'reference' or 'none'");
    }
    auto set = [&](const char* key, Dimension dim, double& field) {
        if (cfg.has("device", key))
            field = cfg.get("device", key, dim);
        else if (preset == "none")
            throw ConfigError(std::string("missing key '") + key + "' in section [device]");
    };
    set("line_impedance", Dimension::impedance, spec.line_impedance);
    set("line_velocity", Dimension::velocity, spec.line_velocity);
    set("stub_impedance", Dimension::impedance, spec.stub_impedance);
    set("stub_velocity", Dimension::velocity, spec.stub_velocity);
    set("stub_base_length", Dimension::length, spec.stub_base_length);
    set("stub_mod_amplitude", Dimension::length, spec.stub_mod_amplitude);
    set("stub_mod_period", Dimension::length, spec.stub_mod_period);
    set("cell_pitch", Dimension::length, spec.cell_pitch);
    set("total_length", Dimension::length, spec.total_length);
    spec.stubs_per_node = static_cast<int>(cfg.get_int("device", "stubs_per_node", spec.stubs_per_node));
    spec.conductor_width = cfg.get("device", "conductor_width", Dimension::length, spec.conductor_width);
    spec.conductor_thickness = cfg.get("device", "conductor_thickness", Dimension::length, spec.conductor_thickness);
    spec.i_quartic = cfg.get("device", "i_quartic", Dimension::current, spec.i_quartic);
    if (cfg.has("device", "i_star")) {
        spec.i_star = cfg.get("device", "i_star", Dimension::current);
    } else if (cfg.has_section("material")) {
        Material m;
        m.gap_parameter_ev = cfg.get("material", "gap_parameter_ev", Dimension::none);
        m.penetration_depth = cfg.get("material", "penetration_depth", Dimension::length);
        m.single_spin_dos = cfg.get("material", "single_spin_dos", Dimension::none);
        m.kappa_star = cfg.get("material", "kappa_star", Dimension::none, 1.0);
        m.transition_temperature = cfg.get("material", "transition_temperature", Dimension::temperature, 0.0);
        spec.i_star = i_star_from_material(m, spec.conductor_width, spec.conductor_thickness);
    } else if (preset == "none") {
        throw ConfigError("[device] needs i_star or a [material] section");
    }

    const std::string loss = cfg.get_string("device", "loss", preset == "reference" ? "two_band" : "none");
    if (loss == "none") {
        spec.loss.clear();
    } else if (loss == "two_band") {
        spec.loss = insertion_loss_table(spec.total_length, cfg.get("device", "loss_signal_db", Dimension::none, 0.85),
                                         cfg.get("device", "loss_idler_db", Dimension::none, 1.5));
    } else {
        throw ConfigError("[device] loss must be 'none' or 'two_band'");
    }
    spec.validate();
    if (cfg.has("device", "calibrate_center")) {
        const double target = cfg.get("device", "calibrate_center", Dimension::frequency);
        const double min_res = cfg.get("device", "min_stub_resonance", Dimension::frequency, 3e9);
        spec = calibrate_velocities(spec, target, min_res);
    }
    return spec;
}

PumpConfig pump_from_config(const Config& cfg, const DeviceSpec& spec) {
    cfg.require_section("pump");
    PumpConfig p;
    p.frequency = cfg.get("pump", "frequency", Dimension::frequency);
    p.selection = parse_mode_selection(cfg.get_string("pump", "modes", "6-mode"));
    const int given = static_cast<int>(cfg.has("pump", "current")) + static_cast<int>(cfg.has("pump", "current_ratio")) +
                      static_cast<int>(cfg.has("pump", "power"));
    if (given != 1) throw ConfigError("[pump] give exactly one of current, current_ratio, power");
    if (cfg.has("pump", "current"))
        p.current = cfg.get("pump", "current", Dimension::current);
    else if (cfg.has("pump", "current_ratio"))
        p.current = cfg.get("pump", "current_ratio", Dimension::none) * spec.i_star;
    else
        p.current = power_to_amplitude(cfg.get("pump", "power", Dimension::power));
    if (!(p.frequency > 0.0)) throw ConfigError("[pump] frequency must be positive");
    if (!(p.current >= 0.0 && p.current < spec.i_star)) throw ConfigError("[pump] current must lie in [0, I*)");
    return p;
}

NoiseChain noise_chain_from_config(const Config& cfg) {
    cfg.require_section("noise");
    NoiseChain c;
    c.t_hot = cfg.get("noise", "t_hot", Dimension::temperature, c.t_hot);
    c.t_cold = cfg.get("noise", "t_cold", Dimension::temperature, c.t_cold);
    c.t_mxc = cfg.get("noise", "t_mxc", Dimension::temperature, c.t_mxc);
    c.l1 = cfg.get("noise", "l1", Dimension::none, c.l1);
    c.l2 = cfg.get("noise", "l2", Dimension::none, c.l2);
    c.g_si = cfg.get("noise", "g_si", Dimension::none, c.g_si);
    c.a_pa_prime = cfg.get("noise", "a_pa_prime", Dimension::none, c.a_pa_prime);
    c.a_hemt = cfg.get("noise", "a_hemt", Dimension::none, c.a_hemt);
    c.g_hemt = cfg.get("noise", "g_hemt", Dimension::none, c.g_hemt);
    c.a_r = cfg.get("noise", "a_r", Dimension::none, c.a_r);
    c.g_r = cfg.get("noise", "g_r", Dimension::none, c.g_r);
    c.bandwidth = cfg.get("noise", "bandwidth", Dimension::frequency, c.bandwidth);
    return c;
}

std::vector<double> sweep_axis_from_config(const Config& cfg, Dimension dim) {
    cfg.require_section("sweep");
    auto value = [&](const char* key) {
        return dim == Dimension::power ? dbm_value(cfg, "sweep", key) : cfg.get("sweep", key, dim);
    };
    const double start = value("start");
    const double stop = value("stop");
    const long long count = cfg.get_int("sweep", "count", 0);
    const std::string scale = cfg.get_string("sweep", "scale", "linear");
    if (count < 1) throw ConfigError("[sweep] count must be at least 1");
    if (count > 1 && !(stop > start)) throw ConfigError("[sweep] range is empty: stop must exceed start");
    if (!std::isfinite(start) || !std::isfinite(stop)) throw ConfigError("[sweep] bounds must be finite");
    if (count == 1) return {start};
    if (scale == "linear") return linear_grid(start, stop, static_cast<std::size_t>(count));
    if (scale == "log") {
        if (!(start > 0.0)) throw ConfigError("[sweep] log scale needs a positive start");
        std::vector<double> v(static_cast<std::size_t>(count));
        const double a = std::log(start), b = std::log(stop);
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(v.size() - 1));
        v.front() = start;
        v.back() = stop;
        return v;
    }
    throw ConfigError("[sweep] scale must be 'linear' or 'log'");
}

namespace {

std::optional<RunOutcome> check_request(const RunRequest& request) {
    RunOutcome o;
    o.status = exit_code::usage;
    if (request.subcommand == "synth") {
        const auto& kinds = synth_kinds();
        if (std::find(kinds.begin(), kinds.end(), request.kind) != kinds.end()) return std::nullopt;
        o.error_json = error_record(o.status, "usage", "unknown synth kind '" + request.kind + "'");
        return o;
    }
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), request.subcommand) != names.end()) return std::nullopt;
    o.error_json = error_record(o.status, "usage", "unknown subcommand '" + request.subcommand + "'");
    return o;
}

}  // namespace

RunOutcome run_with_config(const RunRequest& request, const std::string& config_text) {
    RunOutcome outcome;
    try {
        if (auto bad = check_request(request)) return *bad;
        if (request.jobs < 1) throw ConfigError("--jobs must be at least 1");

        const Config cfg = Config::parse(config_text);
        check_known_keys(cfg);
        const long long seed = cfg.get_int("", "seed", 0);
        if (seed < 0) throw ConfigError("seed must be a non-negative integer");

        Context ctx{cfg, request, hex64(fnv1a64(config_text)), static_cast<std::uint64_t>(seed), {}, {}, {}};
        std::string dir = cfg.get_string("output", "directory", "out");
        if (const char* env = std::getenv("KITWPA_OUTPUT_DIR"); env && *env) dir = env;
        if (request.output_dir) dir = *request.output_dir;
        ctx.out_dir = dir;
        ctx.format = request.format ? *request.format : cfg.get_string("output", "format", "csv");
        if (ctx.format != "csv" && ctx.format != "json") throw ConfigError("output format must be 'csv' or 'json'");

        const std::string& s = request.subcommand;
        if (s == "synth") {
            if (request.kind == "noise-traces") synth_noise_traces(ctx);
            else if (request.kind == "bandgap-data") synth_bandgap_data(ctx);
            else synth_power_sweep(ctx);
        } else if (s == "dispersion") cmd_dispersion(ctx);
        else if (s == "stopband") cmd_stopband(ctx);
        else if (s == "gain") cmd_gain(ctx);
        else if (s == "spectrum") cmd_spectrum(ctx);
        else if (s == "two-tone") cmd_two_tone(ctx);
        else if (s == "noise-forward") cmd_noise_forward(ctx);
        else if (s == "noise-invert") cmd_noise_invert(ctx);
        else if (s == "fit-bandgap") cmd_fit_bandgap(ctx);
        else cmd_compression(ctx);
        outcome.files = std::move(ctx.files);
    } catch (const std::exception& e) {
        const Classified c = classify(e);
        outcome.status = c.status;
        outcome.error_json = error_record(c.status, c.kind, e.what());
    }
    return outcome;
}

RunOutcome run(const RunRequest& request) {
    if (auto bad = check_request(request)) return *bad;
    std::string text;
    try {
        std::ifstream in(request.config_path, std::ios::binary);
        if (!in) throw MissingInputError("cannot open config file '" + request.config_path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    } catch (const std::exception& e) {
        RunOutcome o;
        o.status = exit_code::missing_input;
        o.error_json = error_record(o.status, "missing_input", e.what());
        return o;
    }
    return run_with_config(request, text);
}

}  // namespace kitwpa
