#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pblb/estimates.hpp"
#include "pblb/parallel.hpp"
#include "pblb/rng.hpp"

namespace pblb {

enum class RadiusFamily { constant, polynomial, subexp };

/// A universe of admissible initial-data families, identified by the growth
/// class of the ball radius rho(tau) as the pullback time tau -> -infinity.
class UniverseSpec {
public:
    enum class Kind { fixed_bounded, tempered };

    static UniverseSpec fixed_bounded(double radius) {
        if (!(radius >= 0.0)) throw std::invalid_argument("UniverseSpec: radius must be >= 0");
        UniverseSpec u;
        u.kind_ = Kind::fixed_bounded;
        u.scale_ = radius;
        return u;
    }

    /// Tempered universe with mu > 0; the radius family is one of
    ///   constant:   rho(tau) = scale
    ///   polynomial: rho(tau) = scale*(1+|tau|)^param
    ///   subexp:     rho(tau) = scale*e^{param*|tau|},  param < mu/2
    static UniverseSpec tempered(double mu, RadiusFamily family, double scale,
                                 double param = 0.0) {
        if (!(mu > 0.0)) throw std::invalid_argument("UniverseSpec: mu must be > 0");
        if (!(scale >= 0.0)) throw std::invalid_argument("UniverseSpec: scale must be >= 0");
        if (family == RadiusFamily::polynomial && !(param >= 0.0))
            throw std::invalid_argument("UniverseSpec: polynomial exponent must be >= 0");
        if (family == RadiusFamily::subexp && !(param >= 0.0 && param < mu / 2.0))
            throw std::invalid_argument("UniverseSpec: subexp rate must satisfy 0 <= alpha < mu/2");
        UniverseSpec u;
        u.kind_ = Kind::tempered;
        u.mu_ = mu;
        u.family_ = family;
        u.scale_ = scale;
        u.param_ = param;
        return u;
    }

    Kind kind() const { return kind_; }
    double mu() const { return mu_; }
    RadiusFamily family() const { return family_; }
    double scale() const { return scale_; }

    double radius(double tau) const {
        if (kind_ == Kind::fixed_bounded) return scale_;
        const double a = std::abs(tau);
        switch (family_) {
            case RadiusFamily::constant: return scale_;
            case RadiusFamily::polynomial: return scale_ * std::pow(1.0 + a, param_);
            case RadiusFamily::subexp: return scale_ * std::exp(param_ * a);
        }
        return scale_;
    }

    /// Symbolic membership test: rho^2(tau) e^{mu tau} -> 0 as tau -> -inf,
    /// decided by the family class, never by sampling.
    bool tempered_member(double mu) const {
        if (!(mu > 0.0)) return false;
        if (kind_ == Kind::fixed_bounded) return true;
        switch (family_) {
            case RadiusFamily::constant:
            case RadiusFamily::polynomial: return true;
            case RadiusFamily::subexp: return 2.0 * param_ < mu;
        }
        return false;
    }

    /// True when rho(tau) is uniformly bounded in tau.
    bool radius_bounded() const {
        return kind_ == Kind::fixed_bounded || family_ == RadiusFamily::constant ||
               (family_ == RadiusFamily::polynomial && param_ == 0.0) ||
               (family_ == RadiusFamily::subexp && param_ == 0.0);
    }

private:
    UniverseSpec() = default;
    Kind kind_ = Kind::fixed_bounded;
    double mu_ = 0.0;
    RadiusFamily family_ = RadiusFamily::constant;
    double scale_ = 0.0;
    double param_ = 0.0;
};

/// Finite sample of an evolved data family: all members live on one lattice
/// at one observation time t, pulled back from time tau.
struct EnsembleCloud {
    double t = 0.0;
    double tau = 0.0;
    std::uint64_t seed = 0;
    std::vector<SpectralField> members;
    std::vector<std::string> member_errors;  // per-member blow-up reports

    const WaveLattice& lattice() const {
        if (members.empty()) throw std::invalid_argument("EnsembleCloud: empty cloud");
        return members.front().lattice();
    }
};

enum class DistanceNorm { h, frac14 };

namespace detail {
inline double member_dist(const SpectralField& a, const SpectralField& b, DistanceNorm nm) {
    SpectralField d = a;
    d -= b;
    return nm == DistanceNorm::h ? norm_l2(d) : norm_frac14(d);
}
}  // namespace detail

/// sup over a of inf over b of the member distance; asymmetric by definition.
inline double hausdorff_semidist(const EnsembleCloud& a, const EnsembleCloud& b,
                                 DistanceNorm nm = DistanceNorm::h) {
    if (a.members.empty() || b.members.empty())
        throw std::invalid_argument("hausdorff_semidist: empty cloud");
    require_same_lattice(a.lattice(), b.lattice());
    if (a.t != b.t)
        throw std::invalid_argument("hausdorff_semidist: clouds at different times");
    double sup = 0.0;
    for (const auto& x : a.members) {
        double inf = 1e300;
        for (const auto& y : b.members)
            inf = std::min(inf, detail::member_dist(x, y, nm));
        sup = std::max(sup, inf);
    }
    return sup;
}

/// Max pairwise member distance.
inline double cloud_diameter(const EnsembleCloud& c, DistanceNorm nm = DistanceNorm::h) {
    if (c.members.empty()) throw std::invalid_argument("cloud_diameter: empty cloud");
    double d = 0.0;
    for (std::size_t i = 0; i < c.members.size(); ++i)
        for (std::size_t j = i + 1; j < c.members.size(); ++j)
            d = std::max(d, detail::member_dist(c.members[i], c.members[j], nm));
    return d;
}

/// Deterministic stratified sample of the radius-rho H-ball: roughly half the
/// members sit on the sphere, the rest on volume-uniform radius strata; member
/// i always draws from the derived stream i of the given seed.
inline SpectralField sample_ball_member(const WaveLattice& lat, std::uint64_t seed, int i,
                                        int n_members, double rho, int kmax = 2) {
    const int n_surface = (n_members + 1) / 2;
    double frac = 1.0;
    if (i >= n_surface) {
        const int j = i - n_surface;
        const int n_interior = n_members - n_surface;
        frac = std::cbrt((j + 0.5) / double(n_interior));
    }
    SpectralField u = random_divfree_field(lat, CounterRng(seed).derive(std::uint64_t(i)),
                                           kmax, 1.0);
    u *= rho * frac;
    return u;
}

/// S(t,tau) applied to a seeded sample of the universe ball at pullback time
/// tau. Members integrate independently (and in parallel); a member that blows
/// up is dropped and its report kept.
inline EnsembleCloud pullback_cloud(double t, double tau, const UniverseSpec& universe,
                                    int n_members, std::uint64_t seed, const StepConfig& cfg,
                                    const ModelParams& p, const ForcingSpec& f,
                                    int threads = 0) {
    if (!(tau < t)) throw std::invalid_argument("pullback_cloud: tau must be < t");
    if (n_members < 1) throw std::invalid_argument("pullback_cloud: need >= 1 member");

    const double rho = universe.radius(tau);
    std::vector<std::optional<SpectralField>> slots(n_members);
    std::vector<std::string> errors(n_members);

    parallel_for(std::size_t(n_members), threads, [&](std::size_t i) {
        SpectralField u0 = sample_ball_member(p.lattice, seed, int(i), n_members, rho);
        try {
            TrajectoryRecord rec = integrate(u0, tau, t, cfg, p, f,
                                             {.sample_every = 1 << 30, .keep_snapshots = true});
            slots[i] = std::move(rec.snapshots.back());
        } catch (const BlowupError& e) {
            errors[i] = e.what();
        }
    });

    EnsembleCloud cloud;
    cloud.t = t;
    cloud.tau = tau;
    cloud.seed = seed;
    for (int i = 0; i < n_members; ++i) {
        if (slots[i]) cloud.members.push_back(std::move(*slots[i]));
        else cloud.member_errors.push_back("member " + std::to_string(i) + ": " + errors[i]);
    }
    if (cloud.members.empty())
        throw std::runtime_error("pullback_cloud: every member blew up");
    return cloud;
}

/// Pulled-back ensemble estimate of the attractor section at time t.
struct AttractorEstimate {
    double t = 0.0;
    EnsembleCloud cloud;            // deepest cloud
    double cauchy_gap = 0.0;        // two-sided gap between the last two depths
    double diameter = 0.0;
    bool converged = false;
    std::vector<double> tau_schedule;
    std::vector<double> gaps;       // one per consecutive depth pair
};

/// Runs the full pullback depth schedule and applies the two-sided Cauchy
/// stopping rule: converged iff both semi-distances between the two deepest
/// clouds fall below tol.
inline AttractorEstimate attractor_estimate(double t, const std::vector<double>& tau_schedule,
                                            const UniverseSpec& universe, int n_members,
                                            double tol, std::uint64_t seed,
                                            const StepConfig& cfg, const ModelParams& p,
                                            const ForcingSpec& f,
                                            DistanceNorm nm = DistanceNorm::h,
                                            int threads = 0) {
    if (tau_schedule.size() < 2)
        throw std::invalid_argument("attractor_estimate: schedule needs >= 2 depths");
    for (std::size_t i = 0; i < tau_schedule.size(); ++i) {
        if (!(tau_schedule[i] < t))
            throw std::invalid_argument("attractor_estimate: depths must precede t");
        if (i > 0 && !(tau_schedule[i] < tau_schedule[i - 1]))
            throw std::invalid_argument("attractor_estimate: schedule must be strictly decreasing");
    }

    AttractorEstimate est;
    est.t = t;
    est.tau_schedule = tau_schedule;
    EnsembleCloud prev = pullback_cloud(t, tau_schedule[0], universe, n_members, seed, cfg, p,
                                        f, threads);
    for (std::size_t k = 1; k < tau_schedule.size(); ++k) {
        EnsembleCloud next = pullback_cloud(t, tau_schedule[k], universe, n_members, seed, cfg,
                                            p, f, threads);
        const double gap = std::max(hausdorff_semidist(prev, next, nm),
                                    hausdorff_semidist(next, prev, nm));
        est.gaps.push_back(gap);
        prev = std::move(next);
    }
    est.cloud = std::move(prev);
    est.cauchy_gap = est.gaps.back();
    est.converged = est.cauchy_gap < tol;
    est.diameter = cloud_diameter(est.cloud, nm);
    return est;
}

/// Nested-universe comparison: fixed-bounded vs tempered(mu) vs tempered(mu0).
struct UniverseComparison {
    AttractorEstimate est_fixed, est_mid, est_top;
    double d_fixed_to_mid = 0.0, d_mid_to_top = 0.0;          // inclusion direction
    double d_mid_to_fixed = 0.0, d_top_to_mid = 0.0;          // reverse direction
    double d_fixed_to_top = 0.0, d_top_to_fixed = 0.0;
    bool inclusion_ok = false;
    bool equality_applicable = false;  // tempered radii uniformly bounded
    bool equality_ok = false;
    double tol = 0.0;
};

inline UniverseComparison compare_universes(double t, const std::vector<double>& tau_schedule,
                                            const UniverseSpec& fixed, const UniverseSpec& mid,
                                            const UniverseSpec& top, int n_members, double tol,
                                            std::uint64_t seed, const StepConfig& cfg,
                                            const ModelParams& p, const ForcingSpec& f,
                                            DistanceNorm nm = DistanceNorm::h,
                                            int threads = 0) {
    if (fixed.kind() != UniverseSpec::Kind::fixed_bounded)
        throw std::invalid_argument("compare_universes: first universe must be fixed_bounded");
    if (mid.kind() != UniverseSpec::Kind::tempered || top.kind() != UniverseSpec::Kind::tempered)
        throw std::invalid_argument("compare_universes: mid/top universes must be tempered");
    if (!(mid.mu() <= top.mu()))
        throw std::invalid_argument("compare_universes: expected mu_mid <= mu_top");

    UniverseComparison cmp;
    cmp.tol = tol;
    cmp.est_fixed = attractor_estimate(t, tau_schedule, fixed, n_members, tol, seed, cfg, p, f,
                                       nm, threads);
    cmp.est_mid = attractor_estimate(t, tau_schedule, mid, n_members, tol, seed, cfg, p, f, nm,
                                     threads);
    cmp.est_top = attractor_estimate(t, tau_schedule, top, n_members, tol, seed, cfg, p, f, nm,
                                     threads);
    if (!cmp.est_fixed.converged || !cmp.est_mid.converged || !cmp.est_top.converged)
        throw std::runtime_error("compare_universes: an estimate did not converge");

    cmp.d_fixed_to_mid = hausdorff_semidist(cmp.est_fixed.cloud, cmp.est_mid.cloud, nm);
    cmp.d_mid_to_top = hausdorff_semidist(cmp.est_mid.cloud, cmp.est_top.cloud, nm);
    cmp.d_mid_to_fixed = hausdorff_semidist(cmp.est_mid.cloud, cmp.est_fixed.cloud, nm);
    cmp.d_top_to_mid = hausdorff_semidist(cmp.est_top.cloud, cmp.est_mid.cloud, nm);
    cmp.d_fixed_to_top = hausdorff_semidist(cmp.est_fixed.cloud, cmp.est_top.cloud, nm);
    cmp.d_top_to_fixed = hausdorff_semidist(cmp.est_top.cloud, cmp.est_fixed.cloud, nm);

    cmp.inclusion_ok = cmp.d_fixed_to_mid < tol && cmp.d_mid_to_top < tol;
    cmp.equality_applicable = mid.radius_bounded() && top.radius_bounded();
    if (cmp.equality_applicable)
        cmp.equality_ok = cmp.inclusion_ok && cmp.d_mid_to_fixed < tol &&
                          cmp.d_top_to_mid < tol && cmp.d_fixed_to_top < tol &&
                          cmp.d_top_to_fixed < tol;
    return cmp;
}

/// Generalized-Grashof threshold report for the single-trajectory question.
/// Both the threshold and the measured diameter are recorded; neither
/// direction is asserted as an invariant.
struct NontrivialityReport {
    double g_gen = 0.0;
    double threshold = 0.0;
    double c = 1.0;
    double diameter = 0.0;
    double tol = 0.0;
    bool trivial = false;              // diameter < tol
    bool threshold_exceeded = false;   // g_gen >= threshold
    bool prediction_matched = false;   // threshold_exceeded == !trivial
};

inline NontrivialityReport nontriviality_check(const AttractorEstimate& est,
                                               const ModelParams& p, const ForcingSpec& f,
                                               double window, double tol, double c = 1.0) {
    if (!(p.nu0 > 0.0))
        throw std::invalid_argument("nontriviality_check: requires nu0 > 0");
    if (!(c > 0.0)) throw std::invalid_argument("nontriviality_check: c must be > 0");
    NontrivialityReport r;
    r.c = c;
    r.g_gen = grashof(f, p, est.t, window).g_gen;
    r.threshold = std::sqrt(p.nu0 / (c * p.nu + 4.0 * p.nu0 * p.nu0 * p.nu * kLambda1));
    r.diameter = est.diameter;
    r.tol = tol;
    r.trivial = r.diameter < tol;
    r.threshold_exceeded = r.g_gen >= r.threshold;
    r.prediction_matched = r.threshold_exceeded == !r.trivial;
    return r;
}

/// d(eps) = dist_H(A_eps(t), {0}) as the forcing amplitude vanishes, with a
/// log-log least-squares slope fit over the positive entries.
struct SemicontinuityReport {
    std::vector<double> eps;
    std::vector<double> d;
    double slope = 0.0;
    bool slope_defined = false;
    bool monotone = false;  // d nonincreasing within tol along decreasing eps
    double tol = 0.0;
};

inline SemicontinuityReport semicontinuity_experiment(
    double t, const std::vector<double>& eps_list, const ForcingSpec& shape,
    const std::vector<double>& tau_schedule, const UniverseSpec& universe, int n_members,
    double tol, std::uint64_t seed, const StepConfig& cfg, const ModelParams& p,
    DistanceNorm nm = DistanceNorm::h, int threads = 0) {
    if (eps_list.empty())
        throw std::invalid_argument("semicontinuity_experiment: empty eps list");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("semicontinuity_experiment: eps must be decreasing");

    SemicontinuityReport rep;
    rep.eps = eps_list;
    rep.tol = tol;

    // A_0 = {0}: the unforced flow has the rest state as its attractor
    EnsembleCloud origin;
    origin.t = t;
    origin.members.emplace_back(p.lattice);

    for (double eps : eps_list) {
        ForcingSpec f = eps == 0.0 ? ForcingSpec::zero()
                                   : ForcingSpec::eps_scaled(eps, shape);
        AttractorEstimate est = attractor_estimate(t, tau_schedule, universe, n_members, tol,
                                                   seed, cfg, p, f, nm, threads);
        if (!est.converged)
            throw std::runtime_error("semicontinuity_experiment: unconverged at eps = " +
                                     std::to_string(eps));
        rep.d.push_back(hausdorff_semidist(est.cloud, origin, nm));
    }

    rep.monotone = true;
    for (std::size_t i = 1; i < rep.d.size(); ++i)
        if (rep.d[i] > rep.d[i - 1] + tol) rep.monotone = false;

    // slope of log d vs log eps over strictly positive pairs
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < rep.d.size(); ++i) {
        if (!(rep.eps[i] > 0.0 && rep.d[i] > 0.0)) continue;
        const double x = std::log(rep.eps[i]), y = std::log(rep.d[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++n;
    }
    if (n >= 2) {
        rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        rep.slope_defined = true;
    }
    return rep;
}

/// Diagnostics of the linear decomposition u = v + w, where v carries the
/// initial data through the homogeneous (nonlinearly damped Stokes) flow and
/// w absorbs the advection source B(u,u) and the forcing from rest.
struct VwDiagnostics {
    std::vector<double> times;
    std::vector<double> residual;   // |u - (v+w)| per sample
    std::vector<double> u_energy, v_energy, w_energy;
    double max_residual = 0.0;
    bool v_decay_holds = false;     // |v(t)|^2 <= |v(tau)|^2 e^{-2 nu lambda_1 (t-tau)}
    double v_decay_margin = 0.0;
};

namespace detail {

/// Shared-stage tendencies: the viscosity coefficient and the advection
/// source are evaluated once on the carrier state y, so the arithmetic for
/// u reproduces the standalone stepper and N_v + N_w = N_u holds identically
/// whenever v + w = y.
inline void vw_stage(double t, const SpectralField& y, const SpectralField& v,
                     const SpectralField& w, const ModelParams& p, const ForcingSpec& f,
                     SpectralField& n_u, SpectralField& n_v, SpectralField& n_w) {
    const double ens = norm_h1(y) * norm_h1(y);
    const double coeff = -p.nu0 * ens;

    n_u = stokes_apply(y, 1.0);
    n_u *= coeff;
    n_v = stokes_apply(v, 1.0);
    n_v *= coeff;
    n_w = stokes_apply(w, 1.0);
    n_w *= coeff;

    SpectralField byy = nonlinear_term(y, y);
    n_u -= byy;
    n_w -= byy;
    if (!f.is_zero()) {
        SpectralField pf = leray_project(f.eval(t, y.lattice()));
        n_u += pf;
        n_w += pf;
    }
}

inline void vw_push(SpectralField& x, const SpectralField& n, double dt, double nu) {
    apply_diagonal(x, [&](double k2) { return std::exp(-nu * k2 * dt); });
    SpectralField tmp = n;
    apply_diagonal(tmp, [&](double k2) { return dt * phi1(-nu * k2 * dt); });
    x += tmp;
}

inline void vw_correct(SpectralField& x, const SpectralField& n1, const SpectralField& n0,
                       double dt, double nu) {
    SpectralField d = n1;
    d -= n0;
    apply_diagonal(d, [&](double k2) { return dt * phi2(-nu * k2 * dt); });
    x += d;
}

}  // namespace detail

inline VwDiagnostics vw_decomposition(const SpectralField& u0, double tau, double t_end,
                                      double eps, const ForcingSpec& shape,
                                      const StepConfig& cfg, const ModelParams& p,
                                      int sample_every = 1) {
    if (cfg.scheme != Scheme::etd2 || cfg.viscosity_mode != ViscosityMode::explicit_coeff)
        throw std::invalid_argument("vw_decomposition: only the etd2 explicit scheme is coupled");
    if (!(tau < t_end)) throw std::invalid_argument("vw_decomposition: tau must be < t_end");
    require_same_lattice(u0.lattice(), p.lattice);

    const ForcingSpec f =
        eps == 0.0 ? ForcingSpec::zero() : ForcingSpec::eps_scaled(eps, shape);
    const long long n_steps = std::llround((t_end - tau) / cfg.dt);
    if (n_steps < 1) throw std::invalid_argument("vw_decomposition: horizon shorter than one step");

    SpectralField u = u0, v = u0, w(u0.lattice());
    const double v0_sq = norm_l2(v) * norm_l2(v);

    VwDiagnostics out;
    double min_decay_margin = 1e300;
    auto sample = [&](double t) {
        SpectralField r = u;
        r -= v;
        r -= w;
        const double res = norm_l2(r);
        const double eu = norm_l2(u), ev = norm_l2(v), ew = norm_l2(w);
        out.times.push_back(t);
        out.residual.push_back(res);
        out.u_energy.push_back(eu * eu);
        out.v_energy.push_back(ev * ev);
        out.w_energy.push_back(ew * ew);
        out.max_residual = std::max(out.max_residual, res);
        const double bound = v0_sq * std::exp(-2.0 * p.nu * kLambda1 * (t - tau));
        min_decay_margin = std::min(min_decay_margin, bound - ev * ev);
    };

    sample(tau);
    SpectralField n_u(u.lattice()), n_v(u.lattice()), n_w(u.lattice());
    SpectralField m_u(u.lattice()), m_v(u.lattice()), m_w(u.lattice());
    for (long long k = 0; k < n_steps; ++k) {
        const double t = tau + double(k) * cfg.dt;
        const double budget = viscous_stability_budget(u, cfg, p);
        if (cfg.dt > budget) throw StabilityError(cfg.dt, budget);

        detail::vw_stage(t, u, v, w, p, f, n_u, n_v, n_w);
        SpectralField au = u, av = v, aw = w;
        detail::vw_push(au, n_u, cfg.dt, p.nu);
        detail::vw_push(av, n_v, cfg.dt, p.nu);
        detail::vw_push(aw, n_w, cfg.dt, p.nu);

        detail::vw_stage(t + cfg.dt, au, av, aw, p, f, m_u, m_v, m_w);
        detail::vw_correct(au, m_u, n_u, cfg.dt, p.nu);
        detail::vw_correct(av, m_v, n_v, cfg.dt, p.nu);
        detail::vw_correct(aw, m_w, n_w, cfg.dt, p.nu);
        u = std::move(au);
        v = std::move(av);
        w = std::move(aw);
        if (!std::isfinite(norm_l2(u))) throw BlowupError(t + cfg.dt);
        if ((k + 1) % sample_every == 0 || k + 1 == n_steps)
            sample(tau + double(k + 1) * cfg.dt);
    }

    out.v_decay_margin = min_decay_margin;
    out.v_decay_holds = min_decay_margin >= -1e-8 * std::max(1.0, v0_sq);
    return out;
}

}  // namespace pblb
