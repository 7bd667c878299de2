#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pblb/model.hpp"

namespace pblb {

enum class Scheme { etd2, imex_cn_ab2 };
enum class ViscosityMode { explicit_coeff, picard };

struct PicardOpts {
    int max_iter = 25;
    double tol = 1e-12;
};

struct StepConfig {
    double dt = 1e-2;
    Scheme scheme = Scheme::etd2;
    ViscosityMode viscosity_mode = ViscosityMode::explicit_coeff;
    PicardOpts picard;
    double cfl_safety = 0.9;

    StepConfig() = default;
    explicit StepConfig(double dt_) : dt(dt_) { validate(); }
    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("StepConfig: dt must be > 0");
        if (!(picard.tol > 0.0)) throw std::invalid_argument("StepConfig: picard tol must be > 0");
        if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
            throw std::invalid_argument("StepConfig: cfl_safety must be in (0,1]");
    }
};

class BlowupError : public std::runtime_error {
public:
    explicit BlowupError(double t)
        : std::runtime_error("numerical blow-up at t = " + std::to_string(t)), time(t) {}
    double time;
};

class PicardError : public std::runtime_error {
public:
    explicit PicardError(double residual)
        : std::runtime_error("picard iteration did not converge, residual = " +
                             std::to_string(residual)),
          residual(residual) {}
    double residual;
};

class StabilityError : public std::runtime_error {
public:
    explicit StabilityError(double dt, double budget)
        : std::runtime_error("dt = " + std::to_string(dt) + " exceeds stability budget " +
                             std::to_string(budget)) {}
};

namespace detail {

inline double phi1(double z) {
    if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
    return std::expm1(z) / z;
}
inline double phi2(double z) {
    if (std::abs(z) < 1e-4) return 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
    return (std::expm1(z) - z) / (z * z);
}

/// Per-mode diagonal factor field apply: out = f(|k|^2) .* u.
template <typename Fn>
void apply_diagonal(SpectralField& u, Fn&& factor) {
    std::array<cdouble*, 3> a = {u.component(0), u.component(1), u.component(2)};
    u.for_each_mode([&](std::size_t i, int kx, int ky, int kz) {
        const double k2 = double(kx) * kx + double(ky) * ky + double(kz) * kz;
        const double f = factor(k2);
        a[0][i] *= f;
        a[1][i] *= f;
        a[2][i] *= f;
    });
}

/// The explicitly treated tendency N(x,t) = -nu0||x||^2 Ax - B(x,x) + Pf(t);
/// the viscosity coefficient is evaluated on the state being advanced.
inline SpectralField explicit_tendency(double t, const SpectralField& x, const ModelParams& p,
                                       const ForcingSpec& f, bool coeff_in_exponent) {
    SpectralField n(x.lattice());
    if (!coeff_in_exponent && p.nu0 > 0.0) {
        const double ens = norm_h1(x) * norm_h1(x);
        n = stokes_apply(x, 1.0);
        n *= -p.nu0 * ens;
    }
    n -= nonlinear_term(x, x);
    if (!f.is_zero()) n += leray_project(f.eval(t, x.lattice()));
    return n;
}

/// One ETDRK2 step with linear per-mode rate lam(k) = visc*|k|^2 in the
/// exponential and tendency N treated explicitly.
inline SpectralField etdrk2_step(const SpectralField& u, double t, double dt, double visc,
                                 const ModelParams& p, const ForcingSpec& f,
                                 bool coeff_in_exponent) {
    SpectralField n0 = explicit_tendency(t, u, p, f, coeff_in_exponent);
    // predictor: a = e^{-lam dt} u + dt phi1(-lam dt) N0
    SpectralField a = u;
    apply_diagonal(a, [&](double k2) { return std::exp(-visc * k2 * dt); });
    {
        SpectralField tmp = n0;
        apply_diagonal(tmp, [&](double k2) { return dt * phi1(-visc * k2 * dt); });
        a += tmp;
    }
    SpectralField n1 = explicit_tendency(t + dt, a, p, f, coeff_in_exponent);
    n1 -= n0;
    apply_diagonal(n1, [&](double k2) { return dt * phi2(-visc * k2 * dt); });
    a += n1;
    return a;
}

}  // namespace detail

/// Stability budget for the explicitly treated nonlinear viscous term.
inline double viscous_stability_budget(const SpectralField& u, const StepConfig& cfg,
                                       const ModelParams& p) {
    if (p.nu0 <= 0.0 || cfg.viscosity_mode == ViscosityMode::picard)
        return std::numeric_limits<double>::infinity();
    const double ens = norm_h1(u) * norm_h1(u);
    if (ens == 0.0) return std::numeric_limits<double>::infinity();
    return cfg.cfl_safety / (p.nu0 * ens * p.lattice.lambda_max());
}

/// Advance one step. The nu*A part (plus, in picard mode, the iterated
/// nonlinear-viscosity coefficient) is integrated exactly per mode.
inline SpectralField step(const SpectralField& u, double t, const StepConfig& cfg,
                          const ModelParams& p, const ForcingSpec& f) {
    require_same_lattice(u.lattice(), p.lattice);
    const double budget = viscous_stability_budget(u, cfg, p);
    if (cfg.dt > budget) throw StabilityError(cfg.dt, budget);

    SpectralField out(u.lattice());
    if (cfg.viscosity_mode == ViscosityMode::explicit_coeff) {
        out = detail::etdrk2_step(u, t, cfg.dt, p.nu, p, f, /*coeff_in_exponent=*/false);
    } else {
        const double ens0 = norm_h1(u) * norm_h1(u);
        double coeff = ens0;
        bool converged = false;
        double residual = 0.0;
        for (int it = 0; it < cfg.picard.max_iter; ++it) {
            out = detail::etdrk2_step(u, t, cfg.dt, p.nu + p.nu0 * coeff, p, f,
                                      /*coeff_in_exponent=*/true);
            const double ens1 = norm_h1(out) * norm_h1(out);
            const double next = 0.5 * (ens0 + ens1);
            residual = std::abs(next - coeff) / std::max(1.0, std::abs(coeff));
            coeff = next;
            if (residual < cfg.picard.tol) {
                converged = true;
                break;
            }
        }
        if (!converged) throw PicardError(residual);
    }

    const double e = norm_l2(out);
    if (!std::isfinite(e)) throw BlowupError(t + cfg.dt);
    return out;
}

/// Time series of the scalar diagnostics of a run, plus optional snapshots.
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> energy;      // E = |u|^2
    std::vector<double> enstrophy;   // Ens = ||u||^2
    std::vector<double> quartic;     // Q = ||u||^4
    std::vector<double> frac14;      // |A^{1/4}u|^2
    std::vector<double> work;        // <f(t), u>
    std::vector<double> residual;    // energy-budget residual, filled by energy_budget
    std::vector<SpectralField> snapshots;  // empty, or one per sample
    double dt = 0.0;
    double nu = 0.0, nu0 = 0.0;

    std::size_t size() const { return times.size(); }
};

struct IntegrateOptions {
    int sample_every = 1;       // record every k-th step
    bool keep_snapshots = false;
};

/// Discrete realization of the process S(t,tau). With the one-step etd2
/// scheme, splitting a run at any sample boundary reproduces the full run
/// bit-exactly when tau and dt are exactly representable.
inline TrajectoryRecord integrate(const SpectralField& u0, double tau, double t_end,
                                  const StepConfig& cfg, const ModelParams& p,
                                  const ForcingSpec& f, const IntegrateOptions& opts = {}) {
    if (!(tau < t_end)) throw std::invalid_argument("integrate: tau must be < t_end");
    const long long n_steps = std::llround((t_end - tau) / cfg.dt);
    if (n_steps < 1) throw std::invalid_argument("integrate: horizon shorter than one step");

    TrajectoryRecord rec;
    rec.dt = cfg.dt;
    rec.nu = p.nu;
    rec.nu0 = p.nu0;
    SpectralField u = u0;

    auto sample = [&](double t) {
        const double e = norm_l2(u), h1 = norm_h1(u), f14 = norm_frac14(u);
        rec.times.push_back(t);
        rec.energy.push_back(e * e);
        rec.enstrophy.push_back(h1 * h1);
        rec.quartic.push_back(h1 * h1 * h1 * h1);
        rec.frac14.push_back(f14 * f14);
        rec.work.push_back(f.is_zero() ? 0.0 : inner_h(f.eval(t, u.lattice()), u));
        rec.residual.push_back(0.0);
        if (opts.keep_snapshots) rec.snapshots.push_back(u);
    };

    sample(tau);

    // imex_cn_ab2 keeps one step of tendency history
    SpectralField prev_n;
    bool have_prev = false;

    for (long long k = 0; k < n_steps; ++k) {
        const double t = tau + double(k) * cfg.dt;
        if (cfg.scheme == Scheme::etd2) {
            u = step(u, t, cfg, p, f);
        } else {
            // Crank-Nicolson on nu*A, Adams-Bashforth 2 on everything else
            const double budget = viscous_stability_budget(u, cfg, p);
            if (cfg.dt > budget) throw StabilityError(cfg.dt, budget);
            SpectralField n = detail::explicit_tendency(t, u, p, f, false);
            SpectralField expl = n;
            if (have_prev) {
                expl *= 1.5;
                expl.axpy(-0.5, prev_n);
            }
            SpectralField rhs_field = u;
            detail::apply_diagonal(rhs_field, [&](double k2) { return 1.0 - 0.5 * p.nu * k2 * cfg.dt; });
            rhs_field.axpy(cfg.dt, expl);
            detail::apply_diagonal(rhs_field, [&](double k2) { return 1.0 / (1.0 + 0.5 * p.nu * k2 * cfg.dt); });
            u = rhs_field;
            prev_n = std::move(n);
            have_prev = true;
            if (!std::isfinite(norm_l2(u))) throw BlowupError(t + cfg.dt);
        }
        if ((k + 1) % opts.sample_every == 0 || k + 1 == n_steps)
            sample(tau + double(k + 1) * cfg.dt);
    }
    return rec;
}

struct EnergyBudget {
    std::vector<double> residuals;  // midpoint residuals, size() - 1 entries
    double max_abs = 0.0;
};

/// Midpoint residual r = dE/(2 dt) + nu*Ens + nu0*Q - work of the discrete
/// energy identity; O(dt^2) for smooth trajectories.
inline EnergyBudget energy_budget(const TrajectoryRecord& rec) {
    if (rec.size() < 2) throw std::invalid_argument("energy_budget: need at least 2 samples");
    EnergyBudget out;
    for (std::size_t i = 1; i < rec.size(); ++i) {
        const double dt = rec.times[i] - rec.times[i - 1];
        const double dE = (rec.energy[i] - rec.energy[i - 1]) / (2.0 * dt);
        const double ens = 0.5 * (rec.enstrophy[i] + rec.enstrophy[i - 1]);
        const double q = 0.5 * (rec.quartic[i] + rec.quartic[i - 1]);
        const double w = 0.5 * (rec.work[i] + rec.work[i - 1]);
        const double r = dE + rec.nu * ens + rec.nu0 * q - w;
        out.residuals.push_back(r);
        out.max_abs = std::max(out.max_abs, std::abs(r));
    }
    return out;
}

}  // namespace pblb
