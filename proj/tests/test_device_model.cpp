#include "doctest.h"

#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "kitwpa/device_model.hpp"
#include "kitwpa/errors.hpp"
#include "support.hpp"

using namespace kitwpa;
using kitwpa::testing::reference_device;
using kitwpa::testing::reference_dispersion;

namespace {

DeviceSpec unmodulated() {
    DeviceSpec spec = reference_device();
    spec.stub_mod_amplitude = 0.0;
    return spec;
}

Material tin() {
    Material m;
    m.gap_parameter_ev = 0.68e-3;
    m.penetration_depth = 400e-9;
    m.single_spin_dos = 8.7e27;
    m.kappa_star = 1.0;
    return m;
}

}  // namespace

TEST_CASE("stub admittance vanishes at dc and diverges at the quarter-wave pole") {
    DeviceSpec spec = reference_device();
    CHECK(stub_admittance(0.0, 120e-6, spec) == cplx(0.0, 0.0));

    spec.stub_velocity = 2.4e6;  // about 0.008 c
    const double pole = spec.stub_velocity / (4.0 * 120e-6);
    CHECK(pole == doctest::Approx(5.00e9).epsilon(1e-12));
    CHECK_THROWS_AS(stub_admittance(pole, 120e-6, spec), SingularityError);
    CHECK(std::abs(stub_admittance(0.999 * pole, 120e-6, spec)) > 100.0 / spec.stub_impedance);
    CHECK_THROWS_AS(stub_admittance(-1.0, 120e-6, spec), InvalidArgument);
}

TEST_CASE("cell matrices are reciprocal") {
    const DeviceSpec& spec = reference_device();
    for (double f : {0.1e9, 1.0e9, 2.0e9, 4.7e9, 7.9e9}) {
        for (double len : spec.stub_lengths()) {
            const cplx det = cell_matrix(f, len, spec).determinant();
            CHECK(std::abs(det - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("supercell uses an integer number of cells spanning one period") {
    const DeviceSpec& spec = reference_device();
    CHECK(spec.cells_per_period() == 31);
    CHECK(spec.effective_pitch() * 31 == doctest::Approx(spec.stub_mod_period).epsilon(1e-14));
    const auto lengths = spec.stub_lengths();
    REQUIRE(lengths.size() == 31);
    for (std::size_t n = 0; n < lengths.size(); ++n) CHECK(lengths[n] == doctest::Approx(lengths[30 - n]));
}

TEST_CASE("a bare line has linear dispersion") {
    DeviceSpec spec = reference_device();
    spec.stub_impedance = std::numeric_limits<double>::infinity();
    const auto grid = linear_grid(0.0, 5e9, 501);
    const auto curve = bloch_dispersion(spec, grid);
    CHECK(curve.reference_velocity == doctest::Approx(spec.line_velocity).epsilon(1e-12));
    CHECK(curve.stopbands.empty());
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double k = 2.0 * constants::pi * grid[j] / spec.line_velocity;
        CHECK(curve.bloch_k[j].real() == doctest::Approx(k).epsilon(1e-7));
        CHECK(curve.bloch_k[j].imag() == 0.0);
        CHECK(std::abs(curve.delta_k[j]) < 1e-6 * k);
    }
}

TEST_CASE("uniform stubs follow the single-cell dispersion relation") {
    const DeviceSpec spec = unmodulated();
    const double d = spec.effective_pitch();
    const auto grid = linear_grid(0.0, 6e9, 6001);
    const auto curve = bloch_dispersion(spec, grid);
    CHECK_FALSE(find_stopband(curve, 0.5e9, 3e9).has_value());
    for (std::size_t j = 200; j < grid.size(); j += 50) {
        const double f = grid[j];
        const double theta = 2.0 * constants::pi * f * d / spec.line_velocity;
        const cplx y = stub_admittance(f, spec.stub_base_length, spec);
        const double cos_kd = (std::cos(theta) + cplx(0.0, 1.0) * y * spec.line_impedance / 2.0 * std::sin(theta)).real();
        REQUIRE(std::abs(cos_kd) < 1.0);
        const double k = std::acos(cos_kd) / d;
        CHECK(curve.bloch_k[j].real() == doctest::Approx(k).epsilon(1e-6));
        CHECK(curve.bloch_k[j].imag() < 1e-9 * k);
    }
}

TEST_CASE("calibrated reference geometry") {
    const DeviceSpec& spec = reference_device();
    const auto& curve = reference_dispersion();
    const auto band = find_stopband(curve, 1.0e9, 3.0e9);
    REQUIRE(band.has_value());
    CHECK(std::abs(band->center - 2.08e9) < 0.1 * 2.08e9);
    CHECK(band->center == doctest::Approx(2.0e9).epsilon(1e-4));
    CHECK(std::abs(curve.reference_velocity / (0.0064 * constants::c0) - 1.0) < 0.25);
    CHECK(lowest_stub_resonance(spec) > 3e9);

    SUBCASE("wavenumber grows outside stop bands") {
        for (std::size_t j = 1; j < curve.size(); ++j)
            if (!curve.in_stopband(curve.frequency[j]) && !curve.in_stopband(curve.frequency[j - 1]))
                CHECK(curve.bloch_k[j].real() >= curve.bloch_k[j - 1].real());
    }

    SUBCASE("Bloch impedance below the stop band") {
        for (std::size_t j = 1; j < curve.size() && curve.frequency[j] < 0.8 * band->lower; ++j) {
            const cplx z = curve.bloch_impedance[j];
            CHECK(std::abs(z.imag()) < 0.01 * std::abs(z));
            CHECK(std::abs(z.real() - 50.0) < 0.2 * 50.0);
        }
    }

    SUBCASE("low-frequency phase velocity") {
        const double v = 2.0 * constants::pi * curve.frequency[10] / curve.bloch_k[10].real();
        CHECK(v == doctest::Approx(curve.reference_velocity).epsilon(1e-4));
    }

    SUBCASE("attenuation inside the gap") {
        const std::size_t j = static_cast<std::size_t>(band->center / 1e6);
        CHECK(curve.bloch_k[j].imag() > 0.0);
        CHECK(curve.in_stopband(band->center));
        CHECK_FALSE(curve.in_stopband(0.6e9));
    }
}

TEST_CASE("stop band widens with the modulation depth") {
    DeviceSpec spec = reference_geometry();
    const auto grid = linear_grid(0.0, 4e9, 4001);
    double previous = 0.0;
    for (double amplitude : {5e-6, 10e-6, 20e-6, 40e-6}) {
        spec.stub_mod_amplitude = amplitude;
        const auto band = find_stopband(bloch_dispersion(spec, grid), 1.0e9, 3.0e9);
        REQUIRE(band.has_value());
        CHECK(band->width() > previous);
        previous = band->width();
    }
}

TEST_CASE("dispersion rejects bad grids") {
    const DeviceSpec& spec = reference_device();
    CHECK_THROWS_AS(bloch_dispersion(spec, std::vector<double>{}), InvalidArgument);
    CHECK_THROWS_AS(bloch_dispersion(spec, std::vector<double>{1e9, 0.5e9}), InvalidArgument);
    CHECK_THROWS_AS(bloch_dispersion(spec, std::vector<double>{-1.0, 1e9}), InvalidArgument);
    CHECK_THROWS_AS(bloch_dispersion(spec, std::vector<double>{0.0, 1e9, 6e9}), GridTooCoarseError);
    const auto& curve = reference_dispersion();
    CHECK_THROWS_AS((void)curve.wavenumber(9e9), InvalidArgument);
    CHECK_THROWS_AS(find_stopband(curve, 2e9, 1e9), InvalidArgument);
}

TEST_CASE("wavenumber interpolation reproduces grid values") {
    const auto& curve = reference_dispersion();
    for (std::size_t j = 100; j < 1800; j += 97)
        CHECK(curve.wavenumber(curve.frequency[j]) == doctest::Approx(curve.bloch_k[j].real()).epsilon(1e-12));
}

TEST_CASE("characteristic current from material parameters") {
    const Material m = tin();
    const double w = 320e-9, t = 50e-9;
    const double base = i_star_from_material(m, w, t);
    CHECK(base > 0.0);
    CHECK(i_star_from_material(m, 2.0 * w, t) == doctest::Approx(2.0 * base).epsilon(1e-14));

    Material low = m, high = m;
    low.gap_parameter_ev = 1.764 * constants::k_b * 4.5 / constants::e_charge;
    high.gap_parameter_ev = 1.764 * constants::k_b * 12.5 / constants::e_charge;
    CHECK(i_star_from_material(low, w, t) / i_star_from_material(high, w, t) == doctest::Approx(0.36).epsilon(1e-12));

    Material bad = m;
    bad.kappa_star = 3.0;
    CHECK_THROWS_AS(i_star_from_material(bad, w, t), InvalidArgument);
    CHECK_THROWS_AS(i_star_from_material(m, 0.0, t), InvalidArgument);
}

TEST_CASE("bandgap shift") {
    CHECK(bandgap_shift(0.0, 0.89e-3, 0.86e-3) == 0.0);
    CHECK(bandgap_shift(0.1e-3, 0.89e-3, 0.86e-3) == doctest::Approx(-6.40e-3).epsilon(2e-3));
    for (double i : {0.05e-3, 0.2e-3, 0.4e-3})
        CHECK(bandgap_shift(i, 0.89e-3, 0.86e-3) == bandgap_shift(-i, 0.89e-3, 0.86e-3));
    double previous = 0.0;
    for (double i = 0.05e-3; i < 0.8e-3; i += 0.05e-3) {
        const double s = bandgap_shift(i, 0.89e-3, 0.86e-3);
        CHECK(s < previous);
        previous = s;
    }
    CHECK_THROWS_AS(bandgap_shift(0.1e-3, 0.0, 0.86e-3), InvalidArgument);
}

TEST_CASE("biased dispersion rescales the frequency axis") {
    const DeviceSpec& spec = reference_device();
    const auto& curve = reference_dispersion();
    const auto same = biased_dispersion(spec, curve, 0.0);
    CHECK(same.frequency == curve.frequency);
    CHECK(same.stopbands.front().center == curve.stopbands.front().center);

    const auto biased = biased_dispersion(spec, curve, 0.1e-3);
    const double ratio = biased.stopbands.front().center / curve.stopbands.front().center;
    CHECK(1.0 - ratio == doctest::Approx(6.40e-3).epsilon(2e-3));
    CHECK_THROWS_AS(biased_dispersion(spec, curve, spec.i_star), OutOfModelError);
}

TEST_CASE("loss table") {
    const auto table = insertion_loss_table(0.45);
    DeviceSpec spec = reference_device();
    spec.loss = table;
    const double to_db = 10.0 / std::log(10.0) * 0.45;
    CHECK(spec.loss_at(0.6e9) * to_db == doctest::Approx(0.85));
    CHECK(spec.loss_at(2.5e9) * to_db == doctest::Approx(1.5));
    CHECK(spec.loss_at(1.6e9) * to_db == doctest::Approx(0.85 + 0.65 * 0.7 / 1.4));
    spec.loss.clear();
    CHECK(spec.loss_at(1e9) == 0.0);
    CHECK_THROWS_AS(insertion_loss_table(0.0), InvalidArgument);
}

TEST_CASE("device validation") {
    DeviceSpec spec = reference_device();
    spec.stub_mod_amplitude = spec.stub_base_length;
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
    spec = reference_device();
    spec.total_length = 1e-4;
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
    CHECK_NOTHROW(reference_device().validate());
}
