#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "pblb/fft.hpp"
#include "pblb/field.hpp"

namespace pblb {

namespace detail {
// (2pi)^{3/2}, the normalization constant of the unitary convention
inline double spectral_scale() {
    const double two_pi = 6.28318530717958647692;
    return std::pow(two_pi, 1.5);
}
}  // namespace detail

/// Collocation values of one scalar coefficient cube: u(x_j) = c^{-1} IDFT.
inline std::vector<double> to_physical(const WaveLattice& lat, const cdouble* coeff) {
    std::vector<cdouble> work(coeff, coeff + lat.size());
    fft::transform3d(work.data(), lat.n, true);
    const double inv_c = 1.0 / detail::spectral_scale();
    std::vector<double> out(lat.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = work[i].real() * inv_c;
    return out;
}

/// Forward transform of grid values: uhat = (c/N^3) DFT.
inline std::vector<cdouble> to_spectral(const WaveLattice& lat, const std::vector<double>& grid) {
    std::vector<cdouble> work(grid.begin(), grid.end());
    fft::transform3d(work.data(), lat.n, false);
    const double f = detail::spectral_scale() / static_cast<double>(lat.size());
    for (auto& v : work) v *= f;
    return work;
}

/// Max pointwise speed on the collocation grid (advective CFL input).
inline double max_collocation_speed(const SpectralField& u) {
    std::array<std::vector<double>, 3> g;
    for (int c = 0; c < 3; ++c) g[c] = to_physical(u.lattice(), u.component(c));
    double m = 0.0;
    for (std::size_t i = 0; i < g[0].size(); ++i) {
        const double s2 = g[0][i] * g[0][i] + g[1][i] * g[1][i] + g[2][i] * g[2][i];
        m = std::max(m, s2);
    }
    return std::sqrt(m);
}

/// B(u,v) = P((u.grad)v), computed pseudo-spectrally with the 2/3-rule mask
/// applied before and after the pointwise products. Output is divergence-free,
/// zero-mean and Hermitian-symmetric.
inline SpectralField nonlinear_term(const SpectralField& u, const SpectralField& v) {
    require_same_lattice(u.lattice(), v.lattice());
    const WaveLattice& lat = u.lattice();

    SpectralField ud = u, vd = v;
    apply_dealias_mask(ud);
    apply_dealias_mask(vd);

    std::array<std::vector<double>, 3> ug;
    for (int c = 0; c < 3; ++c) ug[c] = to_physical(lat, ud.component(c));

    SpectralField result(lat);
    std::vector<cdouble> deriv(lat.size());
    std::vector<double> accum(lat.size());
    for (int j = 0; j < 3; ++j) {
        std::fill(accum.begin(), accum.end(), 0.0);
        for (int i = 0; i < 3; ++i) {
            // d_i v_j in spectral space: multiply by i*k_i
            const cdouble* vj = vd.component(j);
            vd.for_each_mode([&](std::size_t m, int kx, int ky, int kz) {
                const int ki = (i == 0) ? kx : (i == 1) ? ky : kz;
                deriv[m] = cdouble(0.0, double(ki)) * vj[m];
            });
            std::vector<double> dg = to_physical(lat, deriv.data());
            const std::vector<double>& ui = ug[i];
            for (std::size_t m = 0; m < accum.size(); ++m) accum[m] += ui[m] * dg[m];
        }
        std::vector<cdouble> what = to_spectral(lat, accum);
        std::copy(what.begin(), what.end(), result.component(j));
    }
    apply_dealias_mask(result);
    hermitian_symmetrize(result);
    return leray_project(std::move(result));
}

/// b(u,v,w) = (B(u,v), w). Skew in the last two arguments.
inline double trilinear(const SpectralField& u, const SpectralField& v, const SpectralField& w) {
    require_same_lattice(u.lattice(), w.lattice());
    return inner_h(nonlinear_term(u, v), w);
}

}  // namespace pblb
