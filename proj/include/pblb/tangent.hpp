#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pblb/estimates.hpp"
#include "pblb/rng.hpp"

namespace pblb {

/// The linearized operator comes in two flavors: with the viscosity
/// coefficient frozen at ||u||^2 (paper_operator), and with the additional
/// rank-one coefficient variation 2 nu0 ((u,U)) Au that makes it the true
/// Gateaux derivative (full_gateaux).
enum class LinearizationVariant { paper_operator, full_gateaux };

/// F'(u) U = -(nu + nu0 ||u||^2) A U - B(u,U) - B(U,u) [- 2 nu0 ((u,U)) A u].
inline SpectralField tangent_rhs(const SpectralField& u, const SpectralField& U,
                                 LinearizationVariant variant, const ModelParams& p) {
    require_same_lattice(u.lattice(), U.lattice());
    require_same_lattice(u.lattice(), p.lattice);
    const double ens = norm_h1(u) * norm_h1(u);
    SpectralField out = stokes_apply(U, 1.0);
    out *= -(p.nu + p.nu0 * ens);
    out -= nonlinear_term(u, U);
    out -= nonlinear_term(U, u);
    if (variant == LinearizationVariant::full_gateaux && p.nu0 > 0.0) {
        const double uv = inner_v(u, U);
        if (uv != 0.0) {
            SpectralField au = stokes_apply(u, 1.0);
            out.axpy(-2.0 * p.nu0 * uv, au);
        }
    }
    return out;
}

namespace detail {

/// Explicit part of the tangent tendency at a given carrier state y (the
/// nu*A piece lives in the exponential, exactly as in the base stepper).
inline SpectralField tangent_tendency(const SpectralField& y, const SpectralField& U,
                                      LinearizationVariant variant, const ModelParams& p) {
    const double ens = norm_h1(y) * norm_h1(y);
    SpectralField n(U.lattice());
    if (p.nu0 > 0.0) {
        n = stokes_apply(U, 1.0);
        n *= -p.nu0 * ens;
    }
    n -= nonlinear_term(y, U);
    n -= nonlinear_term(U, y);
    if (variant == LinearizationVariant::full_gateaux && p.nu0 > 0.0) {
        const double uv = inner_v(y, U);
        if (uv != 0.0) {
            SpectralField au = stokes_apply(y, 1.0);
            n.axpy(-2.0 * p.nu0 * uv, au);
        }
    }
    return n;
}

/// One coupled ETDRK2 step of the base state and a tangent bundle; the
/// tangent stages see the same carrier states the base stages produce.
inline void tangent_step(SpectralField& u, std::vector<SpectralField>& tangents, double t,
                         const StepConfig& cfg, const ModelParams& p, const ForcingSpec& f,
                         LinearizationVariant variant) {
    const double budget = viscous_stability_budget(u, cfg, p);
    if (cfg.dt > budget) throw StabilityError(cfg.dt, budget);
    const double dt = cfg.dt;

    SpectralField n0 = explicit_tendency(t, u, p, f, false);
    SpectralField a = u;
    apply_diagonal(a, [&](double k2) { return std::exp(-p.nu * k2 * dt); });
    {
        SpectralField tmp = n0;
        apply_diagonal(tmp, [&](double k2) { return dt * phi1(-p.nu * k2 * dt); });
        a += tmp;
    }

    std::vector<SpectralField> stage;
    stage.reserve(tangents.size());
    std::vector<SpectralField> m0;
    m0.reserve(tangents.size());
    for (const auto& U : tangents) {
        SpectralField nu0f = tangent_tendency(u, U, variant, p);
        SpectralField aU = U;
        apply_diagonal(aU, [&](double k2) { return std::exp(-p.nu * k2 * dt); });
        SpectralField tmp = nu0f;
        apply_diagonal(tmp, [&](double k2) { return dt * phi1(-p.nu * k2 * dt); });
        aU += tmp;
        stage.push_back(std::move(aU));
        m0.push_back(std::move(nu0f));
    }

    SpectralField n1 = explicit_tendency(t + dt, a, p, f, false);
    for (std::size_t i = 0; i < tangents.size(); ++i) {
        SpectralField d = tangent_tendency(a, stage[i], variant, p);
        d -= m0[i];
        apply_diagonal(d, [&](double k2) { return dt * phi2(-p.nu * k2 * dt); });
        tangents[i] = std::move(stage[i]);
        tangents[i] += d;
    }
    n1 -= n0;
    apply_diagonal(n1, [&](double k2) { return dt * phi2(-p.nu * k2 * dt); });
    a += n1;
    u = std::move(a);
    if (!std::isfinite(norm_l2(u))) throw BlowupError(t + dt);
}

/// Modified Gram-Schmidt in the H inner product. Returns the diagonal norms
/// (stretching factors). Throws on rank deficiency.
inline std::vector<double> mgs_orthonormalize(std::vector<SpectralField>& v,
                                              const std::string& where) {
    std::vector<double> diag;
    diag.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) v[i].axpy(-inner_h(v[j], v[i]), v[j]);
        const double r = norm_l2(v[i]);
        if (!(r > 1e-300))
            throw std::runtime_error("tangent bundle rank-deficient at " + where);
        v[i] *= 1.0 / r;
        diag.push_back(r);
    }
    return diag;
}

}  // namespace detail

/// Canonical real Stokes eigenmode: for the wavevector k and polarization
/// index pol in {0,1}, phase 0 is the cosine mode and phase 1 the sine mode;
/// all modes are unit vectors in H and mutually orthogonal.
inline SpectralField stokes_eigenmode(const WaveLattice& lat, int kx, int ky, int kz, int pol,
                                      int phase) {
    if (kx == 0 && ky == 0 && kz == 0)
        throw std::invalid_argument("stokes_eigenmode: k must be nonzero");
    const double k[3] = {double(kx), double(ky), double(kz)};
    // deterministic orthonormal polarization pair: cross k with the axis of
    // smallest |k_i|, then complete the frame
    int axis = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(k[i]) < std::abs(k[axis])) axis = i;
    double e[3] = {0, 0, 0};
    e[axis] = 1.0;
    double p1[3] = {k[1] * e[2] - k[2] * e[1], k[2] * e[0] - k[0] * e[2],
                    k[0] * e[1] - k[1] * e[0]};
    double n1 = std::sqrt(p1[0] * p1[0] + p1[1] * p1[1] + p1[2] * p1[2]);
    for (double& x : p1) x /= n1;
    double p2[3] = {k[1] * p1[2] - k[2] * p1[1], k[2] * p1[0] - k[0] * p1[2],
                    k[0] * p1[1] - k[1] * p1[0]};
    double n2 = std::sqrt(p2[0] * p2[0] + p2[1] * p2[1] + p2[2] * p2[2]);
    for (double& x : p2) x /= n2;
    const double* d = pol == 0 ? p1 : p2;

    SpectralField u(lat);
    const double amp = 1.0 / std::sqrt(2.0);
    const std::size_t ip = lat.flat(lat.fft_index(kx), lat.fft_index(ky), lat.fft_index(kz));
    const std::size_t im = lat.flat(lat.fft_index(-kx), lat.fft_index(-ky), lat.fft_index(-kz));
    for (int c = 0; c < 3; ++c) {
        cdouble* a = u.component(c);
        if (phase == 0) {
            a[ip] = cdouble(amp * d[c], 0.0);
            a[im] = cdouble(amp * d[c], 0.0);
        } else {
            a[ip] = cdouble(0.0, -amp * d[c]);
            a[im] = cdouble(0.0, amp * d[c]);
        }
    }
    return u;
}

/// First n eigenmodes of the Stokes operator on the retained lattice, ordered
/// by eigenvalue then lexicographic wavevector: an H-orthonormal basis.
inline std::vector<SpectralField> stokes_eigenbasis(const WaveLattice& lat, int n) {
    struct Entry {
        double k2;
        int kx, ky, kz;
    };
    std::vector<Entry> reps;
    const int lim = lat.dealias_limit();
    for (int kx = -lim; kx <= lim; ++kx)
        for (int ky = -lim; ky <= lim; ++ky)
            for (int kz = -lim; kz <= lim; ++kz) {
                if (kx == 0 && ky == 0 && kz == 0) continue;
                // one representative per {k,-k} pair
                if (kx < 0 || (kx == 0 && (ky < 0 || (ky == 0 && kz < 0)))) continue;
                reps.push_back({double(kx) * kx + double(ky) * ky + double(kz) * kz, kx, ky, kz});
            }
    std::sort(reps.begin(), reps.end(), [](const Entry& a, const Entry& b) {
        if (a.k2 != b.k2) return a.k2 < b.k2;
        if (a.kx != b.kx) return a.kx < b.kx;
        if (a.ky != b.ky) return a.ky < b.ky;
        return a.kz < b.kz;
    });
    std::vector<SpectralField> basis;
    for (const Entry& r : reps) {
        for (int pol = 0; pol < 2 && int(basis.size()) < n; ++pol)
            for (int phase = 0; phase < 2 && int(basis.size()) < n; ++phase)
                basis.push_back(stokes_eigenmode(lat, r.kx, r.ky, r.kz, pol, phase));
        if (int(basis.size()) >= n) break;
    }
    if (int(basis.size()) < n)
        throw std::invalid_argument("stokes_eigenbasis: lattice has fewer than n modes");
    return basis;
}

struct TangentOptions {
    LinearizationVariant variant = LinearizationVariant::full_gateaux;
    int reorth_interval = 1;
    std::vector<SpectralField> initial_tangents;  // default: seeded random fields
    std::uint64_t seed = 0;
};

/// Joint result of trace-sum accumulation and Lyapunov-exponent estimation
/// for one tangent bundle along one base trajectory.
struct TangentBundleResult {
    int n = 0;
    double t0 = 0.0, t1 = 0.0;
    double q_n = 0.0;        // (1/T) int Tr_n(F' o Q_n)
    double q_n_tail = 0.0;   // same average over the last half window
    std::vector<double> q_prefix;  // q_k for k = 1..n from the nested MGS spans
    std::vector<double> exponents;     // sorted descending
    std::vector<double> partial_sums;  // partial sums of the exponents
    double kaplan_yorke = 0.0;
};

/// Propagates n tangents in lockstep with the base flow, re-orthonormalizing
/// by modified Gram-Schmidt in H every reorth_interval steps. The trace is
/// evaluated each step on an orthonormal basis of the current tangent span.
inline TangentBundleResult evolve_tangent_bundle(const SpectralField& u0, double tau,
                                                 double t_end, int n, const StepConfig& cfg,
                                                 const ModelParams& p, const ForcingSpec& f,
                                                 const TangentOptions& opts = {}) {
    if (n < 1) throw std::invalid_argument("evolve_tangent_bundle: n must be >= 1");
    if (opts.reorth_interval < 1)
        throw std::invalid_argument("evolve_tangent_bundle: reorth_interval must be >= 1");
    if (!(tau < t_end)) throw std::invalid_argument("evolve_tangent_bundle: tau must be < t_end");
    const long long n_steps = std::llround((t_end - tau) / cfg.dt);
    if (n_steps < 1) throw std::invalid_argument("evolve_tangent_bundle: horizon too short");

    std::vector<SpectralField> tangents;
    if (!opts.initial_tangents.empty()) {
        if (int(opts.initial_tangents.size()) != n)
            throw std::invalid_argument("evolve_tangent_bundle: need exactly n initial tangents");
        tangents = opts.initial_tangents;
    } else {
        for (int i = 0; i < n; ++i)
            tangents.push_back(random_divfree_field(
                p.lattice, CounterRng(opts.seed).derive(std::uint64_t(i)), 2, 1.0));
    }
    detail::mgs_orthonormalize(tangents, "initialization");

    SpectralField u = u0;
    std::vector<double> log_r(n, 0.0);

    // per-direction diagonal terms <F'e_i, e_i> on the MGS basis of the
    // current span (nested: the first k span the first k tangents)
    auto instant_terms = [&](const SpectralField& base,
                             const std::vector<SpectralField>& bundle) {
        std::vector<SpectralField> basis = bundle;
        detail::mgs_orthonormalize(basis, "trace evaluation");
        std::vector<double> terms;
        terms.reserve(basis.size());
        for (const auto& e : basis)
            terms.push_back(inner_h(tangent_rhs(base, e, opts.variant, p), e));
        return terms;
    };

    std::vector<double> prefix_accum(n, 0.0);
    double trace_tail = 0.0;
    std::vector<double> prev_terms = instant_terms(u, tangents);
    const long long half = n_steps / 2;

    for (long long k = 0; k < n_steps; ++k) {
        const double t = tau + double(k) * cfg.dt;
        detail::tangent_step(u, tangents, t, cfg, p, f, opts.variant);
        if ((k + 1) % opts.reorth_interval == 0 || k + 1 == n_steps) {
            const std::vector<double> r =
                detail::mgs_orthonormalize(tangents, "step " + std::to_string(k + 1));
            for (int i = 0; i < n; ++i) log_r[i] += std::log(r[i]);
        }
        const std::vector<double> terms = instant_terms(u, tangents);
        double run = 0.0;
        for (int i = 0; i < n; ++i) {
            run += 0.5 * cfg.dt * (prev_terms[i] + terms[i]);
            prefix_accum[i] += 0.5 * cfg.dt * (prev_terms[i] + terms[i]);
        }
        if (k >= half) trace_tail += run;
        prev_terms = terms;
    }
    double trace_accum = 0.0;
    for (double a : prefix_accum) trace_accum += a;

    TangentBundleResult res;
    res.n = n;
    res.t0 = tau;
    res.t1 = t_end;
    const double span = t_end - tau;
    res.q_n = trace_accum / span;
    double prefix = 0.0;
    for (int i = 0; i < n; ++i) res.q_prefix.push_back((prefix += prefix_accum[i]) / span);
    const double tail_span = double(n_steps - half) * cfg.dt;
    res.q_n_tail = tail_span > 0.0 ? trace_tail / tail_span : res.q_n;

    res.exponents.resize(n);
    for (int i = 0; i < n; ++i) res.exponents[i] = log_r[i] / span;
    std::sort(res.exponents.rbegin(), res.exponents.rend());
    double s = 0.0;
    for (double mu : res.exponents) res.partial_sums.push_back(s += mu);

    // Kaplan-Yorke: j + (sum_1^j mu)/|mu_{j+1}| at the sign crossover
    if (res.exponents[0] < 0.0) {
        res.kaplan_yorke = 0.0;
    } else {
        int j = 0;
        while (j < n && res.partial_sums[j] >= 0.0) ++j;
        if (j >= n) res.kaplan_yorke = double(n);  // no crossover inside the bundle
        else
            res.kaplan_yorke =
                double(j) + (j > 0 ? res.partial_sums[j - 1] : 0.0) / std::abs(res.exponents[j]);
    }
    return res;
}

/// Time-averaged trace sum q_n(T) with tail-window convergence diagnostics.
inline TangentBundleResult trace_sum(const SpectralField& u0, double tau, double t_end, int n,
                                     const StepConfig& cfg, const ModelParams& p,
                                     const ForcingSpec& f, const TangentOptions& opts = {}) {
    return evolve_tangent_bundle(u0, tau, t_end, n, cfg, p, f, opts);
}

/// Lyapunov exponents with per-step re-orthonormalization plus Kaplan-Yorke.
inline TangentBundleResult lyapunov_exponents(const SpectralField& u0, double tau, double t_end,
                                              int n, const StepConfig& cfg,
                                              const ModelParams& p, const ForcingSpec& f,
                                              TangentOptions opts = {}) {
    opts.reorth_interval = 1;
    return evolve_tangent_bundle(u0, tau, t_end, n, cfg, p, f, opts);
}

/// r(delta) = |S(t,tau)(u0 + delta xi) - S(t,tau)u0 - delta U(t)| / (delta |xi|),
/// with U co-integrated from xi along the base trajectory.
inline std::vector<std::pair<double, double>> uniform_differentiability_check(
    const SpectralField& u0, const SpectralField& xi, double tau, double t_end,
    const std::vector<double>& delta_list, LinearizationVariant variant, const StepConfig& cfg,
    const ModelParams& p, const ForcingSpec& f) {
    if (delta_list.empty())
        throw std::invalid_argument("uniform_differentiability_check: empty delta list");
    const double xi_norm = norm_l2(xi);
    if (!(xi_norm > 0.0))
        throw std::invalid_argument("uniform_differentiability_check: xi must be nonzero");
    const long long n_steps = std::llround((t_end - tau) / cfg.dt);
    if (n_steps < 1) throw std::invalid_argument("uniform_differentiability_check: horizon too short");

    SpectralField u = u0;
    std::vector<SpectralField> bundle{xi};
    for (long long k = 0; k < n_steps; ++k)
        detail::tangent_step(u, bundle, tau + double(k) * cfg.dt, cfg, p, f, variant);
    const SpectralField& U = bundle[0];

    std::vector<std::pair<double, double>> table;
    for (double delta : delta_list) {
        if (!(delta > 0.0))
            throw std::invalid_argument("uniform_differentiability_check: delta must be > 0");
        SpectralField v0 = u0;
        v0.axpy(delta, xi);
        TrajectoryRecord rec = integrate(v0, tau, t_end, cfg, p, f,
                                         {.sample_every = 1 << 30, .keep_snapshots = true});
        SpectralField diff = rec.snapshots.back();
        diff -= u;
        diff.axpy(-delta, U);
        table.emplace_back(delta, norm_l2(diff) / (delta * xi_norm));
    }
    return table;
}

/// Evaluation of the trace-formula dimension bound on the torus.
struct DimensionBoundReport {
    std::vector<double> bound_curve;  // entry i is the bound at n = i+1
    int n_star = 0;                   // first n with a negative bound, 0 if none
    double paper_bound = 0.0;         // max{3, C_F*G + 2 nu/27}
    double additive_constant = 0.0;   // 2 nu / 27
    double weyl_constant = 0.0;
    double volume = 0.0;
    double M = 0.0;
    int measured_crossing = 0;        // first n with q_n < 0 (0 if none/not given)
    bool crossing_within_bound = false;
};

/// Bound curve n -> 2nu/27 - pi nu n^2/(2|Omega|) - pi^2 nu0 n^4/|Omega|^2 + (C/nu) M
/// with |Omega| = (2 pi)^3, plus the headline bound max{3, C_F*G + 2nu/27}.
inline DimensionBoundReport dimension_bound_report(const ModelParams& p,
                                                   const GrashofReport& gr, double M, double C,
                                                   double C_F, int n_max,
                                                   const std::vector<double>& q_values = {}) {
    if (n_max < 1) throw std::invalid_argument("dimension_bound_report: n_max must be >= 1");
    if (!(M >= 0.0)) throw std::invalid_argument("dimension_bound_report: M must be >= 0");
    const double pi = 3.14159265358979323846;
    DimensionBoundReport rep;
    rep.volume = std::pow(2.0 * pi, 3);
    rep.additive_constant = 2.0 * p.nu / 27.0;
    rep.M = M;
    rep.weyl_constant = weyl_lower_constant(p.lattice);
    for (int n = 1; n <= n_max; ++n) {
        const double nn = double(n);
        const double b = rep.additive_constant - pi * p.nu * nn * nn / (2.0 * rep.volume) -
                         pi * pi * p.nu0 * nn * nn * nn * nn / (rep.volume * rep.volume) +
                         (C / p.nu) * M;
        rep.bound_curve.push_back(b);
        if (rep.n_star == 0 && b < 0.0) rep.n_star = n;
    }
    rep.paper_bound = std::max(3.0, (gr.present ? C_F * gr.g_sup : 0.0) + rep.additive_constant);
    for (std::size_t i = 0; i < q_values.size(); ++i)
        if (q_values[i] < 0.0) {
            rep.measured_crossing = int(i) + 1;
            break;
        }
    rep.crossing_within_bound = rep.measured_crossing > 0 && rep.n_star > 0 &&
                                rep.measured_crossing <= rep.n_star;
    return rep;
}

/// Least-squares fit of the trilinear constant C so that the bound curve
/// tracks measured trace sums: q_n ~ base(n) + (C/nu) M.
inline double fit_trilinear_constant(const std::vector<double>& q_values,
                                     const ModelParams& p, double M) {
    if (q_values.empty()) throw std::invalid_argument("fit_trilinear_constant: no data");
    if (!(M > 0.0)) throw std::invalid_argument("fit_trilinear_constant: M must be > 0");
    const double pi = 3.14159265358979323846;
    const double vol = std::pow(2.0 * pi, 3);
    double acc = 0.0;
    for (std::size_t i = 0; i < q_values.size(); ++i) {
        const double nn = double(i + 1);
        const double base = 2.0 * p.nu / 27.0 - pi * p.nu * nn * nn / (2.0 * vol) -
                            pi * pi * p.nu0 * nn * nn * nn * nn / (vol * vol);
        acc += q_values[i] - base;
    }
    return p.nu * acc / (double(q_values.size()) * M);
}

}  // namespace pblb
