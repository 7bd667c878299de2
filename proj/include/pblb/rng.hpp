#pragma once

#include <cmath>
#include <cstdint>

#include "pblb/field.hpp"
#include "pblb/operators.hpp"

namespace pblb {

/// Counter-based generator: every draw is a pure function of (seed, stream,
/// counter), so parallel scheduling cannot perturb the values a consumer sees.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    CounterRng derive(std::uint64_t substream) const {
        return CounterRng(mix(seed_ ^ 0x9e3779b97f4a7c15ull, substream), stream_);
    }

    std::uint64_t next_u64() { return mix(mix(seed_, stream_), counter_++); }

    /// Uniform in [0,1).
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (fixed algorithm, no cached spare).
    double next_normal() {
        double u1 = next_uniform();
        while (u1 <= 0.0) u1 = next_uniform();
        const double u2 = next_uniform();
        const double two_pi = 6.28318530717958647692;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        // splitmix64 finalizer applied to a combined key
        std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

/// Random divergence-free, zero-mean field supported on modes with
/// |k_i| <= kmax, normalized (when norm > 0) to the requested H norm.
inline SpectralField random_divfree_field(const WaveLattice& lat, CounterRng rng,
                                          int kmax = 2, double h_norm = 1.0) {
    SpectralField f(lat);
    std::array<cdouble*, 3> a = {f.component(0), f.component(1), f.component(2)};
    const int lim = std::min(kmax, lat.dealias_limit());
    for (int kx = -lim; kx <= lim; ++kx)
        for (int ky = -lim; ky <= lim; ++ky)
            for (int kz = -lim; kz <= lim; ++kz) {
                if (kx == 0 && ky == 0 && kz == 0) continue;
                const std::size_t i = lat.flat(lat.fft_index(kx), lat.fft_index(ky), lat.fft_index(kz));
                for (int c = 0; c < 3; ++c)
                    a[c][i] = cdouble(rng.next_normal(), rng.next_normal());
            }
    hermitian_symmetrize(f);
    f = leray_project(std::move(f));
    if (h_norm > 0.0) {
        const double cur = norm_l2(f);
        if (cur > 0.0) f *= h_norm / cur;
    }
    return f;
}

/// Single shear mode u = amplitude*cos(k.x)*dir with dir _|_ k; |u| = amplitude.
/// The two nonzero coefficients carry amplitude/sqrt(2) each.
inline SpectralField shear_mode_field(const WaveLattice& lat, int kx, int ky, int kz,
                                      int dir_component, double amplitude) {
    SpectralField f(lat);
    const int kd[3] = {kx, ky, kz};
    if (kd[dir_component] != 0)
        throw std::invalid_argument("shear_mode_field: direction must be orthogonal to k");
    const double amp = amplitude / std::sqrt(2.0);
    f.at(dir_component, lat.fft_index(kx), lat.fft_index(ky), lat.fft_index(kz)) = amp;
    f.at(dir_component, lat.fft_index(-kx), lat.fft_index(-ky), lat.fft_index(-kz)) = amp;
    return f;
}

}  // namespace pblb
