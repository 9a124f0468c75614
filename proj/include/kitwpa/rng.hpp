#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "kitwpa/units.hpp"

namespace kitwpa {

/// Seeded normal deviates that reproduce across platforms.
///
/// std::mt19937_64 is fully specified by the standard, but the standard
/// distributions are not, so uniforms are taken from the top 53 bits and
/// turned into normals with the Box-Muller transform here.
class PortableNormal {
public:
    explicit PortableNormal(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * constants::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace kitwpa
