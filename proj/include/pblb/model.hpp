#pragma once

#include <optional>
#include <stdexcept>

#include "pblb/forcing.hpp"
#include "pblb/operators.hpp"

namespace pblb {

/// lambda_1 = 1 on the unit torus lattice.
inline constexpr double kLambda1 = 1.0;

struct ModelParams {
    double nu = 1.0;
    double nu0 = 1.0;  // nu0 = 0 recovers the classical NSE
    WaveLattice lattice;

    ModelParams() = default;
    ModelParams(double nu_, double nu0_, WaveLattice lat) : nu(nu_), nu0(nu0_), lattice(lat) {
        if (!(nu > 0.0)) throw std::invalid_argument("ModelParams: nu must be > 0");
        if (nu0 < 0.0) throw std::invalid_argument("ModelParams: nu0 must be >= 0");
    }

    double mu0() const { return nu * kLambda1; }
};

/// Tendency of u_t + nu A u + nu0 ||u||^2 A u + B(u,u) = P f(t):
/// returns -nu A u - nu0 ||u||^2 A u - B(u,u) + P f(t).
inline SpectralField rhs(double t, const SpectralField& u, const ModelParams& p,
                         const ForcingSpec& f) {
    require_same_lattice(u.lattice(), p.lattice);
    const double ens = norm_h1(u) * norm_h1(u);
    const double visc = p.nu + p.nu0 * ens;
    SpectralField out = stokes_apply(u, 1.0);
    out *= -visc;
    out -= nonlinear_term(u, u);
    if (!f.is_zero()) out += leray_project(f.eval(t, u.lattice()));
    return out;
}

struct GrashofReport {
    bool present = false;  // requires nu0 > 0
    double g_sup = 0.0;    // ||f||^2_{Linf(-inf,t;H)} / (nu0^2 lambda_1)
    double g_gen = 0.0;    // <|f|^2>^{1/2}_{<=t} / (nu0^2 lambda_1)
    double window = 0.0;   // window of the time-average proxy
};

/// Grashof numbers normalized by nu0^2 lambda_1, with the limsup average
/// approximated by a finite windowed average over [t-window, t].
inline GrashofReport grashof(const ForcingSpec& f, const ModelParams& p, double t, double window) {
    GrashofReport rep;
    rep.window = window;
    if (p.nu0 <= 0.0) return rep;  // absent, not NaN
    rep.present = true;
    const double denom = p.nu0 * p.nu0 * kLambda1;
    rep.g_sup = f.sup_norm_sq(t, ForcingNorm::h) / denom;
    rep.g_gen = std::sqrt(f.window_average_sq(t, window, ForcingNorm::h, p.lattice)) / denom;
    return rep;
}

}  // namespace pblb
