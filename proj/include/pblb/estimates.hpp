#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pblb/integrator.hpp"
#include "pblb/spectrum.hpp"

namespace pblb {

/// Machine-checkable outcome of one a priori inequality along a trajectory.
struct InequalityVerdict {
    std::string name;
    bool holds = false;
    double margin = 0.0;      // min over samples of RHS - LHS
    double worst_time = 0.0;
    double slack = 0.0;
    std::map<std::string, double> constants;
};

namespace detail {

inline InequalityVerdict finalize(std::string name, double margin, double worst_time,
                                  double scale, std::map<std::string, double> constants,
                                  double slack_factor = 1e-8) {
    InequalityVerdict v;
    v.name = std::move(name);
    v.margin = margin;
    v.worst_time = worst_time;
    v.slack = slack_factor * std::max(scale, 1.0);
    v.holds = margin >= -v.slack;
    v.constants = std::move(constants);
    return v;
}

}  // namespace detail

/// Differential energy inequality at interior samples (centered differences).
/// Sharp form: dE/dt + nu*Ens + 2 nu0*Q <= (1/nu)||f||_{V'}^2.
/// Quoted form: dE/(2dt) + (nu/2)Ens + nu0*Q <= (8/nu)||f||_{V'}^2.
/// Both margins are carried; the verdict is on the sharp form.
inline InequalityVerdict verify_energy_inequality(const TrajectoryRecord& rec,
                                                  const ForcingSpec& f, const ModelParams& p) {
    if (rec.size() < 3) throw std::invalid_argument("verify_energy_inequality: need >= 3 samples");
    double margin_sharp = 1e300, margin_paper = 1e300, worst = rec.times.front(), scale = 1.0;
    for (std::size_t i = 1; i + 1 < rec.size(); ++i) {
        const double dEdt = (rec.energy[i + 1] - rec.energy[i - 1]) /
                            (rec.times[i + 1] - rec.times[i - 1]);
        const double fsq = f.norm_sq(rec.times[i], ForcingNorm::v_dual, p.lattice);
        const double lhs_sharp = dEdt + p.nu * rec.enstrophy[i] + 2.0 * p.nu0 * rec.quartic[i];
        const double rhs_sharp = fsq / p.nu;
        const double lhs_paper = 0.5 * dEdt + 0.5 * p.nu * rec.enstrophy[i] + p.nu0 * rec.quartic[i];
        const double rhs_paper = 8.0 * fsq / p.nu;
        scale = std::max({scale, std::abs(lhs_sharp), rhs_sharp});
        if (rhs_sharp - lhs_sharp < margin_sharp) {
            margin_sharp = rhs_sharp - lhs_sharp;
            worst = rec.times[i];
        }
        margin_paper = std::min(margin_paper, rhs_paper - lhs_paper);
    }
    return detail::finalize("energy_inequality", margin_sharp, worst, scale,
                            {{"C_sharp", 1.0 / p.nu},
                             {"C_paper", 8.0 / p.nu},
                             {"margin_paper", margin_paper}});
}

/// Pullback decay bound with the sharp constant C = 1:
/// E(t) <= E(tau) e^{-mu(t-tau)} + (1/nu) int_{-inf}^t e^{-mu(t-s)} ||f||_{V'}^2 ds.
inline InequalityVerdict verify_decay_bound(const TrajectoryRecord& rec, const ForcingSpec& f,
                                            const ModelParams& p, double mu) {
    if (!(mu > 0.0 && mu <= p.mu0() + 1e-12))
        throw std::invalid_argument("verify_decay_bound: mu must be in (0, nu*lambda_1]");
    const double tau = rec.times.front();
    const double e0 = rec.energy.front();
    double margin = 1e300, worst = tau, scale = 1.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const double t = rec.times[i];
        const double rhs = e0 * std::exp(-mu * (t - tau)) +
                           f.discounted_integral(mu, t, ForcingNorm::v_dual) / p.nu;
        scale = std::max({scale, rec.energy[i], rhs});
        if (rhs - rec.energy[i] < margin) {
            margin = rhs - rec.energy[i];
            worst = t;
        }
    }
    return detail::finalize("decay_bound", margin, worst, scale, {{"C", 1.0}, {"mu", mu}});
}

/// Absorbing family with radius rho_0^2(t) = 1 + (4/(nu*lambda_1))
/// int e^{-mu(t-s)} ||f||_{V'}^2 ds. Entry is declared when E first falls
/// below rho_0^2 and stays there; the predicted entry time comes from the
/// decay bound reaching the eps-ball (eps = 0.25).
inline InequalityVerdict verify_absorbing_radius(const TrajectoryRecord& rec,
                                                 const ForcingSpec& f, const ModelParams& p,
                                                 double mu) {
    if (!(mu > 0.0 && mu <= p.mu0() + 1e-12))
        throw std::invalid_argument("verify_absorbing_radius: mu out of range");
    const double eps = 0.25;
    const double tau = rec.times.front();
    const double e0 = rec.energy.front();
    const double t_pred = e0 > eps ? tau + std::log(e0 / eps) / mu : tau;

    auto rho_sq = [&](double t) {
        return 1.0 + 4.0 / (p.nu * kLambda1) * f.discounted_integral(mu, t, ForcingNorm::v_dual);
    };

    // empirical entry: last crossing into the ball
    double t_entry = rec.times.back();
    bool inside_tail = false;
    for (std::size_t i = rec.size(); i-- > 0;) {
        if (rec.energy[i] <= rho_sq(rec.times[i])) {
            t_entry = rec.times[i];
            inside_tail = true;
        } else
            break;
    }
    if (!inside_tail)
        throw std::runtime_error("verify_absorbing_radius: run too short, ball never entered");

    double margin = 1e300, worst = t_pred, scale = 1.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const double t = rec.times[i];
        if (t < t_pred) continue;
        const double rhs = rho_sq(t);
        scale = std::max({scale, rec.energy[i], rhs});
        if (rhs - rec.energy[i] < margin) {
            margin = rhs - rec.energy[i];
            worst = t;
        }
    }
    return detail::finalize("absorbing_radius", margin, worst, scale,
                            {{"mu", mu},
                             {"eps", eps},
                             {"entry_predicted", t_pred},
                             {"entry_empirical", t_entry},
                             {"rho_sq_end", rho_sq(rec.times.back())}});
}

/// Unit-window integral bound and long-window averaged bounds.
/// Integral form (quoted constant): nu int_t^{t+1} Ens + 2 nu0 int_t^{t+1} Q
///   <= (16/nu) sup||f||_{V'}^2 + E(t); the 2/nu variant is also reported.
/// Averaged forms carry the exact finite-window boundary term (E(s)-E(t))/W.
inline InequalityVerdict verify_time_avg_bounds(const TrajectoryRecord& rec,
                                                const ForcingSpec& f, const ModelParams& p) {
    if (rec.times.back() - rec.times.front() < 1.0)
        throw std::invalid_argument("verify_time_avg_bounds: record shorter than 1 time unit");

    // trapezoid cumulative integrals of Ens and Q
    const std::size_t n = rec.size();
    std::vector<double> cum_ens(n, 0.0), cum_q(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double h = rec.times[i] - rec.times[i - 1];
        cum_ens[i] = cum_ens[i - 1] + 0.5 * h * (rec.enstrophy[i] + rec.enstrophy[i - 1]);
        cum_q[i] = cum_q[i - 1] + 0.5 * h * (rec.quartic[i] + rec.quartic[i - 1]);
    }
    auto interp_cum = [&](const std::vector<double>& cum, double t) {
        const auto it = std::lower_bound(rec.times.begin(), rec.times.end(), t);
        std::size_t j = std::min<std::size_t>(it - rec.times.begin(), n - 1);
        if (j == 0) return cum[0];
        const double h = rec.times[j] - rec.times[j - 1];
        const double w = h > 0 ? (t - rec.times[j - 1]) / h : 0.0;
        return cum[j - 1] + w * (cum[j] - cum[j - 1]);
    };

    double margin_int = 1e300, margin_int_sharp = 1e300, worst = rec.times.front(), scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = rec.times[i];
        if (t + 1.0 > rec.times.back() + 1e-12) break;
        const double ie = interp_cum(cum_ens, t + 1.0) - cum_ens[i];
        const double iq = interp_cum(cum_q, t + 1.0) - cum_q[i];
        const double lhs = p.nu * ie + 2.0 * p.nu0 * iq;
        const double fsup = f.sup_norm_sq(t + 1.0, ForcingNorm::v_dual);
        const double rhs = 16.0 / p.nu * fsup + rec.energy[i];
        scale = std::max({scale, lhs, rhs});
        if (rhs - lhs < margin_int) {
            margin_int = rhs - lhs;
            worst = t;
        }
        margin_int_sharp = std::min(margin_int_sharp, 2.0 / p.nu * fsup + rec.energy[i] - lhs);
    }

    // averaged bounds over the full record window
    const double t_end = rec.times.back(), t_start = rec.times.front();
    const double window = t_end - t_start;
    const double avg_ens = cum_ens.back() / window;
    const double avg_q = cum_q.back() / window;
    const double avg_f = f.window_average_sq(t_end, window, ForcingNorm::h, p.lattice);
    const double boundary = (rec.energy.front() - rec.energy.back()) / window;

    const double margin_avg_ens =
        2.0 * avg_f / (p.nu * p.nu * kLambda1) + boundary / p.nu - avg_ens;
    double margin_avg_q = 1e300;
    if (p.nu0 > 0.0)
        margin_avg_q = avg_f / (p.nu * p.nu0 * kLambda1) + boundary / (2.0 * p.nu0) - avg_q;

    const double margin = std::min({margin_int, margin_avg_ens, margin_avg_q});
    return detail::finalize("time_avg_bounds", margin, worst, scale,
                            {{"C_integral_paper", 16.0 / p.nu},
                             {"C_integral_sharp", 2.0 / p.nu},
                             {"margin_integral", margin_int},
                             {"margin_integral_sharp", margin_int_sharp},
                             {"margin_avg_ens", margin_avg_ens},
                             {"margin_avg_q", margin_avg_q},
                             {"window", window}});
}

/// |A^{1/4}(I-P_m)u|^2 along the snapshots, P_m the projection onto modes
/// with eigenvalue <= lambda_m (m counted with polarization multiplicity).
inline std::vector<double> spectral_tail_series(const TrajectoryRecord& rec,
                                                const WaveLattice& lat, std::size_t m) {
    if (rec.snapshots.empty())
        throw std::invalid_argument("spectral_tail_series: record has no snapshots");
    double lambda_m = 0.0;
    if (m > 0) {
        const std::vector<double> ev = stokes_spectrum(lat, m);
        if (ev.size() < m) lambda_m = 1e300;  // projection covers everything
        else lambda_m = ev[m - 1];
    }
    std::vector<double> tail;
    tail.reserve(rec.snapshots.size());
    for (const auto& u : rec.snapshots) {
        double acc = 0.0;
        for (int c = 0; c < 3; ++c) {
            const cdouble* a = u.component(c);
            u.for_each_mode([&](std::size_t i, int kx, int ky, int kz) {
                const double k2 = double(kx) * kx + double(ky) * ky + double(kz) * kz;
                if (k2 > lambda_m) acc += std::sqrt(k2) * std::norm(a[i]);
            });
        }
        tail.push_back(acc);
    }
    return tail;
}

/// MWZ-style tail smallness: max_t |A^{1/4}(I-P_m)u(t)|^2 < eps.
inline InequalityVerdict verify_tail_smallness(const TrajectoryRecord& rec,
                                               const WaveLattice& lat, std::size_t m,
                                               double eps) {
    const std::vector<double> tail = spectral_tail_series(rec, lat, m);
    double worst = rec.times.front(), max_tail = 0.0;
    for (std::size_t i = 0; i < tail.size(); ++i)
        if (tail[i] > max_tail) {
            max_tail = tail[i];
            worst = rec.times[i];
        }
    return detail::finalize("tail_smallness", eps - max_tail, worst, std::max(eps, max_tail),
                            {{"m", double(m)}, {"eps", eps}, {"max_tail", max_tail}});
}

/// (eps, m) frontier: smallest mode count m whose tail stays below each eps.
inline std::vector<std::pair<double, std::size_t>> tail_frontier(
    const TrajectoryRecord& rec, const WaveLattice& lat, const std::vector<double>& eps_list) {
    const std::size_t m_max = stokes_spectrum(lat).size();
    std::vector<std::pair<double, std::size_t>> frontier;
    auto max_tail = [&](std::size_t m) {
        const auto tail = spectral_tail_series(rec, lat, m);
        return *std::max_element(tail.begin(), tail.end());
    };
    for (double eps : eps_list) {
        // tail is nonincreasing in m, so bisect for the frontier
        if (max_tail(m_max) >= eps) {
            frontier.emplace_back(eps, m_max + 1);
            continue;
        }
        std::size_t lo = 0, hi = m_max;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (max_tail(mid) < eps) hi = mid;
            else lo = mid + 1;
        }
        frontier.emplace_back(eps, lo);
    }
    return frontier;
}

}  // namespace pblb
