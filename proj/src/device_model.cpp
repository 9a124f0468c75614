#include "kitwpa/device_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kitwpa/errors.hpp"

namespace kitwpa {

using constants::pi;

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw InvalidArgument(what);
}

}  // namespace

void Material::validate() const {
    require(gap_parameter_ev > 0.0, "material: gap parameter must be positive");
    require(penetration_depth > 0.0, "material: penetration depth must be positive");
    require(single_spin_dos > 0.0, "material: density of states must be positive");
    require(kappa_star >= 0.5 && kappa_star <= 2.0, "material: kappa* must lie in [0.5, 2]");
}

void DeviceSpec::validate() const {
    require(line_impedance > 0.0 && line_velocity > 0.0, "device: line impedance and velocity must be positive");
    require(stub_impedance > 0.0 && stub_velocity > 0.0, "device: stub impedance and velocity must be positive");
    require(cell_pitch > 0.0, "device: cell pitch must be positive");
    require(stub_mod_period >= cell_pitch, "device: modulation period must be at least one cell");
    require(total_length >= stub_mod_period, "device: total length shorter than one period");
    require(stub_base_length > 0.0, "device: stub length must be positive");
    require(stub_mod_amplitude >= 0.0 && stub_mod_amplitude < stub_base_length,
            "device: stub modulation must be smaller than the base length");
    require(stubs_per_node >= 0, "device: negative stub count");
    require(i_star > 0.0 && i_quartic > 0.0, "device: characteristic currents must be positive");
    for (std::size_t j = 0; j < loss.size(); ++j) {
        require(loss[j].alpha >= 0.0, "device: negative loss");
        if (j > 0) require(loss[j].frequency > loss[j - 1].frequency, "device: loss table not increasing");
    }
}

double DeviceSpec::loss_at(double f) const {
    if (loss.empty()) return 0.0;
    if (f <= loss.front().frequency) return loss.front().alpha;
    if (f >= loss.back().frequency) return loss.back().alpha;
    auto hi = std::upper_bound(loss.begin(), loss.end(), f,
                               [](double x, const LossPoint& p) { return x < p.frequency; });
    auto lo = hi - 1;
    const double t = (f - lo->frequency) / (hi->frequency - lo->frequency);
    return lo->alpha + t * (hi->alpha - lo->alpha);
}

int DeviceSpec::cells_per_period() const {
    return std::max(1, static_cast<int>(std::lround(stub_mod_period / cell_pitch)));
}

double DeviceSpec::effective_pitch() const { return stub_mod_period / cells_per_period(); }

std::vector<double> DeviceSpec::stub_lengths() const {
    // Sampled symmetrically about the period center so the supercell is
    // mirror symmetric and its Bloch impedance is real in the pass bands.
    const int n_cell = cells_per_period();
    std::vector<double> lengths(n_cell);
    const double mid = 0.5 * (n_cell - 1);
    for (int n = 0; n < n_cell; ++n)
        lengths[n] = stub_base_length + stub_mod_amplitude * std::cos(2.0 * pi * (n - mid) / n_cell);
    return lengths;
}

bool DeviceSpec::has_stubs() const { return stubs_per_node > 0 && std::isfinite(stub_impedance); }

cplx stub_admittance(double f, double stub_length, const DeviceSpec& spec) {
    if (f < 0.0) throw InvalidArgument("stub_admittance: negative frequency");
    if (!spec.has_stubs()) return {0.0, 0.0};
    const double x = 2.0 * pi * f * stub_length / spec.stub_velocity;
    const double c = std::cos(x);
    if (std::abs(c) < 1e-12) {
        std::ostringstream msg;
        msg << "stub_admittance: quarter-wave pole at f = " << f << " Hz (length " << stub_length << " m)";
        throw SingularityError(msg.str());
    }
    return cplx(0.0, spec.stubs_per_node * std::sin(x) / c / spec.stub_impedance);
}

Eigen::Matrix2cd line_matrix(double f, double length, double impedance, double velocity) {
    const double theta = 2.0 * pi * f * length / velocity;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Eigen::Matrix2cd m;
    m << cplx(c, 0.0), cplx(0.0, impedance * s),
         cplx(0.0, s / impedance), cplx(c, 0.0);
    return m;
}

Eigen::Matrix2cd cell_matrix(double f, double stub_length, const DeviceSpec& spec) {
    const Eigen::Matrix2cd half =
        line_matrix(f, 0.5 * spec.effective_pitch(), spec.line_impedance, spec.line_velocity);
    Eigen::Matrix2cd shunt;
    shunt << cplx(1.0, 0.0), cplx(0.0, 0.0), stub_admittance(f, stub_length, spec), cplx(1.0, 0.0);
    return half * shunt * half;
}

Eigen::Matrix2cd supercell_matrix(double f, const DeviceSpec& spec) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
    for (double len : spec.stub_lengths()) m = m * cell_matrix(f, len, spec);
    return m;
}

namespace {

struct LowFrequencyLimit {
    double velocity;
    double impedance;
};

// Quasi-static limit of one period: series inductance of the line and the
// shunt capacitance of line plus stubs (tan x -> x).
LowFrequencyLimit low_frequency_limit(const DeviceSpec& spec) {
    const double period = spec.stub_mod_period;
    const double inductance = period * spec.line_impedance / spec.line_velocity;
    double capacitance = period / (spec.line_impedance * spec.line_velocity);
    if (spec.has_stubs()) {
        for (double len : spec.stub_lengths())
            capacitance += spec.stubs_per_node * len / (spec.stub_impedance * spec.stub_velocity);
    }
    return {period / std::sqrt(inductance * capacitance), std::sqrt(inductance / capacitance)};
}

struct PhaseTracker {
    double prev_re = 0.0;
    double prev_f = 0.0;
    double slope = 0.0;  // d Re(phi) / df, from the last two points

    // Picks the branch of arccos(c) continuing the previous phase.
    cplx advance(double f, double c) {
        const cplx theta = std::acos(cplx(c, 0.0));
        const double base = std::abs(theta.real());
        const double imag = std::abs(theta.imag());
        const double predicted = prev_re + std::max(0.0, slope) * (f - prev_f);
        const long n0 = static_cast<long>(std::floor(predicted / (2.0 * pi)));
        double best = std::numeric_limits<double>::quiet_NaN();
        for (long n = n0 - 1; n <= n0 + 2; ++n) {
            for (double sign : {1.0, -1.0}) {
                const double cand = 2.0 * pi * static_cast<double>(n) + sign * base;
                if (cand < prev_re - 1e-9) continue;
                if (std::isnan(best) || std::abs(cand - predicted) < std::abs(best - predicted))
                    best = cand;
            }
        }
        best = std::max(best, prev_re);
        if (best - prev_re > pi) {
            std::ostringstream msg;
            msg << "bloch_dispersion: phase step exceeds pi near " << f << " Hz; refine the grid";
            throw GridTooCoarseError(msg.str());
        }
        if (f > prev_f) slope = (best - prev_re) / (f - prev_f);
        prev_re = best;
        prev_f = f;
        return {best, imag};
    }
};

std::vector<StopBand> scan_stopbands(const std::vector<double>& freq, const std::vector<double>& half_trace,
                                     double lo, double hi) {
    constexpr double threshold = 1.0 + 1e-9;
    std::vector<StopBand> bands;
    const std::size_t n = freq.size();
    std::size_t j = 0;
    auto excess = [&](std::size_t i) { return std::abs(half_trace[i]) - 1.0; };
    auto crossing = [&](std::size_t outside, std::size_t inside) {
        const double a = excess(outside);
        const double b = excess(inside);
        if (b == a) return freq[inside];
        const double t = -a / (b - a);
        return freq[outside] + t * (freq[inside] - freq[outside]);
    };
    while (j < n) {
        if (freq[j] < lo || freq[j] > hi || std::abs(half_trace[j]) <= threshold) {
            ++j;
            continue;
        }
        std::size_t first = j;
        while (j + 1 < n && freq[j + 1] <= hi && std::abs(half_trace[j + 1]) > threshold) ++j;
        std::size_t last = j;
        StopBand band;
        band.lower = (first > 0 && freq[first - 1] >= lo) ? crossing(first - 1, first) : freq[first];
        band.upper = (last + 1 < n && freq[last + 1] <= hi) ? crossing(last + 1, last) : freq[last];
        band.center = 0.5 * (band.lower + band.upper);
        bands.push_back(band);
        ++j;
    }
    return bands;
}

}  // namespace

DispersionCurve bloch_dispersion(const DeviceSpec& spec, std::span<const double> f_grid) {
    spec.validate();
    if (f_grid.empty()) throw InvalidArgument("bloch_dispersion: empty grid");
    for (std::size_t j = 0; j < f_grid.size(); ++j) {
        if (f_grid[j] < 0.0) throw InvalidArgument("bloch_dispersion: negative frequency");
        if (j > 0 && f_grid[j] <= f_grid[j - 1])
            throw InvalidArgument("bloch_dispersion: grid must be strictly increasing");
    }

    const auto limit = low_frequency_limit(spec);
    const double period = spec.stub_mod_period;

    DispersionCurve curve;
    curve.period = period;
    curve.reference_velocity = limit.velocity;
    curve.frequency.assign(f_grid.begin(), f_grid.end());
    curve.bloch_k.reserve(f_grid.size());
    curve.delta_k.reserve(f_grid.size());
    curve.bloch_impedance.reserve(f_grid.size());
    curve.half_trace.reserve(f_grid.size());

    PhaseTracker tracker;
    // Ramp up to the first grid point so the branch starts at phi(0) = 0.
    const double f0 = f_grid.front();
    if (f0 > 0.0) {
        const double spacing = f_grid.size() > 1 ? f_grid[1] - f_grid[0] : f0 / 64.0;
        const auto steps = static_cast<long>(std::min(1e6, std::ceil(f0 / spacing)));
        for (long s = 1; s < steps; ++s) {
            const double f = f0 * static_cast<double>(s) / static_cast<double>(steps);
            tracker.advance(f, supercell_matrix(f, spec).trace().real() / 2.0);
        }
    }

    for (double f : f_grid) {
        const Eigen::Matrix2cd m = supercell_matrix(f, spec);
        const double c = m.trace().real() / 2.0;
        const cplx phi = (f == 0.0) ? cplx(0.0, 0.0) : tracker.advance(f, c);
        const cplx k = phi / period;
        curve.half_trace.push_back(c);
        curve.bloch_k.push_back(k);
        curve.delta_k.push_back(k.real() - 2.0 * pi * f / limit.velocity);

        const cplx lambda = std::exp(cplx(0.0, 1.0) * phi);
        const cplx denom = lambda - m(0, 0);
        if (f == 0.0 || std::abs(denom) < 1e-14 * (1.0 + std::abs(m(0, 1))))
            curve.bloch_impedance.emplace_back(limit.impedance, 0.0);
        else
            curve.bloch_impedance.push_back(m(0, 1) / denom);
    }

    curve.stopbands = scan_stopbands(curve.frequency, curve.half_trace, curve.frequency.front(),
                                     curve.frequency.back());
    return curve;
}

std::optional<StopBand> find_stopband(const DispersionCurve& curve, double lo, double hi) {
    if (curve.size() == 0) throw InvalidArgument("find_stopband: empty curve");
    if (!(hi > lo)) throw InvalidArgument("find_stopband: empty search range");
    if (lo < curve.min_frequency() || hi > curve.max_frequency())
        throw InvalidArgument("find_stopband: curve does not cover the search range");
    const auto bands = scan_stopbands(curve.frequency, curve.half_trace, lo, hi);
    if (bands.empty()) return std::nullopt;
    return *std::max_element(bands.begin(), bands.end(),
                             [](const StopBand& a, const StopBand& b) { return a.width() < b.width(); });
}

double DispersionCurve::wavenumber(double f) const {
    const std::size_t n = frequency.size();
    if (n == 0) throw InvalidArgument("wavenumber: empty curve");
    if (f < frequency.front() || f > frequency.back())
        throw InvalidArgument("wavenumber: frequency " + std::to_string(f) + " Hz outside the dispersion grid");
    const double linear = 2.0 * pi * f / reference_velocity;
    if (n == 1) return linear + delta_k.front();
    auto it = std::upper_bound(frequency.begin(), frequency.end(), f);
    std::size_t i = (it == frequency.end()) ? n - 2 : static_cast<std::size_t>(it - frequency.begin()) - 1;
    i = std::min(i, n - 2);
    const double x0 = frequency[i], x1 = frequency[i + 1];
    const double h = x1 - x0;
    auto slope = [&](std::size_t j) {
        if (j == 0) return (delta_k[1] - delta_k[0]) / (frequency[1] - frequency[0]);
        if (j == n - 1) return (delta_k[n - 1] - delta_k[n - 2]) / (frequency[n - 1] - frequency[n - 2]);
        return (delta_k[j + 1] - delta_k[j - 1]) / (frequency[j + 1] - frequency[j - 1]);
    };
    const double t = (f - x0) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double dk = h00 * delta_k[i] + h10 * h * slope(i) + h01 * delta_k[i + 1] + h11 * h * slope(i + 1);
    return linear + dk;
}

bool DispersionCurve::in_stopband(double f) const {
    return std::any_of(stopbands.begin(), stopbands.end(),
                       [f](const StopBand& b) { return f >= b.lower && f <= b.upper; });
}

double i_star_from_material(const Material& m, double width, double thickness) {
    m.validate();
    if (!(width > 0.0) || !(thickness > 0.0))
        throw InvalidArgument("i_star_from_material: width and thickness must be positive");
    const double gap_j = m.gap_parameter_ev * constants::e_charge;
    const double dos_j = m.single_spin_dos / constants::e_charge;
    return width * thickness * m.kappa_star * (gap_j / m.penetration_depth) * std::sqrt(dos_j / constants::mu0);
}

double bandgap_shift(double i_dc, double i_star, double i_quartic) {
    if (!(i_star > 0.0) || !(i_quartic > 0.0))
        throw InvalidArgument("bandgap_shift: characteristic currents must be positive");
    const double q = (i_dc / i_star) * (i_dc / i_star);
    const double r = (i_dc / i_quartic) * (i_dc / i_quartic);
    return -0.5 * (q + r * r);
}

DispersionCurve biased_dispersion(const DeviceSpec& spec, const DispersionCurve& curve, double i_dc) {
    if (std::abs(i_dc) >= spec.i_star)
        throw OutOfModelError("biased_dispersion: |I_dc| must stay below I*");
    const double scale = 1.0 + bandgap_shift(i_dc, spec.i_star, spec.i_quartic);
    DispersionCurve out = curve;
    for (double& f : out.frequency) f *= scale;
    for (auto& band : out.stopbands) {
        band.lower *= scale;
        band.upper *= scale;
        band.center *= scale;
    }
    out.reference_velocity *= scale;
    return out;
}

std::vector<LossPoint> insertion_loss_table(double total_length, double signal_band_db, double idler_band_db) {
    if (!(total_length > 0.0)) throw InvalidArgument("insertion_loss_table: length must be positive");
    const double to_alpha = std::log(10.0) / 10.0 / total_length;
    return {{0.0, signal_band_db * to_alpha},
            {0.9e9, signal_band_db * to_alpha},
            {2.3e9, idler_band_db * to_alpha}};
}

DeviceSpec reference_geometry() {
    DeviceSpec spec;
    spec.stub_base_length = 120e-6;
    spec.stub_mod_amplitude = 20e-6;
    spec.stub_mod_period = 461e-6;
    spec.cell_pitch = 15e-6;
    spec.stubs_per_node = 2;
    spec.total_length = 0.45;
    spec.i_star = 0.89e-3;
    spec.i_quartic = 0.86e-3;
    spec.conductor_width = 320e-9;
    spec.conductor_thickness = 50e-9;
    spec.loss = insertion_loss_table(spec.total_length);

    const double z_loaded = 50.0;
    const double v_loaded = 0.0064 * constants::c0;
    const double l_per_m = z_loaded / v_loaded;
    const double c_per_m = 1.0 / (z_loaded * v_loaded);
    const double stub_ratio = spec.stubs_per_node * spec.stub_base_length / spec.cell_pitch;
    const double c_line = c_per_m / (1.0 + stub_ratio);
    spec.line_impedance = std::sqrt(l_per_m / c_line);
    spec.line_velocity = 1.0 / std::sqrt(l_per_m * c_line);
    spec.stub_impedance = spec.line_impedance;
    spec.stub_velocity = spec.line_velocity;
    return spec;
}

double lowest_stub_resonance(const DeviceSpec& spec) {
    if (!spec.has_stubs()) return std::numeric_limits<double>::infinity();
    const auto lengths = spec.stub_lengths();
    const double longest = *std::max_element(lengths.begin(), lengths.end());
    return spec.stub_velocity / (4.0 * longest);
}

DeviceSpec calibrate_velocities(const DeviceSpec& spec, double target_center, double min_stub_resonance) {
    if (!(target_center > 0.0)) throw InvalidArgument("calibrate_velocities: target must be positive");
    DeviceSpec out = spec;
    for (int pass = 0; pass < 4; ++pass) {
        const auto grid = linear_grid(0.0, 2.0 * target_center, 4001);
        const auto curve = bloch_dispersion(out, grid);
        const auto band = find_stopband(curve, 0.5 * target_center, 1.5 * target_center);
        if (!band) throw InvalidArgument("calibrate_velocities: no stop band near the target");
        const double scale = target_center / band->center;
        out.line_velocity *= scale;
        out.stub_velocity *= scale;
        if (std::abs(scale - 1.0) < 1e-9) break;
    }
    if (lowest_stub_resonance(out) < min_stub_resonance)
        throw InvalidArgument("calibrate_velocities: stub resonance falls below the curvature target");
    return out;
}

std::vector<double> linear_grid(double start, double stop, std::size_t count) {
    if (count == 0) throw InvalidArgument("linear_grid: empty grid");
    if (count == 1) return {start};
    std::vector<double> grid(count);
    for (std::size_t j = 0; j < count; ++j)
        grid[j] = start + (stop - start) * static_cast<double>(j) / static_cast<double>(count - 1);
    return grid;
}

}  // namespace kitwpa
