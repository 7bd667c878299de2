// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned; parameters are chosen so the whole gate
// runs in well under an hour on one core.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pblb/runner.hpp"

using namespace pblb;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, const char* label, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", idx, label,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// O(N^6) direct convolution reference for B(u,v) over retained modes.
SpectralField convolution_oracle(const SpectralField& u, const SpectralField& v) {
    const WaveLattice& lat = u.lattice();
    const int lim = lat.dealias_limit();
    const double inv_c = 1.0 / std::pow(6.28318530717958647692, 1.5);
    SpectralField w(lat);
    for (int kx = -lim; kx <= lim; ++kx)
        for (int ky = -lim; ky <= lim; ++ky)
            for (int kz = -lim; kz <= lim; ++kz) {
                cdouble acc[3] = {0.0, 0.0, 0.0};
                for (int px = -lim; px <= lim; ++px)
                    for (int py = -lim; py <= lim; ++py)
                        for (int pz = -lim; pz <= lim; ++pz) {
                            const int qx = kx - px, qy = ky - py, qz = kz - pz;
                            if (std::abs(qx) > lim || std::abs(qy) > lim || std::abs(qz) > lim)
                                continue;
                            const std::size_t ip =
                                lat.flat(lat.fft_index(px), lat.fft_index(py), lat.fft_index(pz));
                            const std::size_t iq =
                                lat.flat(lat.fft_index(qx), lat.fft_index(qy), lat.fft_index(qz));
                            const cdouble udotq = u.component(0)[ip] * cdouble(0, qx) +
                                                  u.component(1)[ip] * cdouble(0, qy) +
                                                  u.component(2)[ip] * cdouble(0, qz);
                            for (int c = 0; c < 3; ++c) acc[c] += udotq * v.component(c)[iq];
                        }
                const std::size_t ik =
                    lat.flat(lat.fft_index(kx), lat.fft_index(ky), lat.fft_index(kz));
                for (int c = 0; c < 3; ++c) w.component(c)[ik] = acc[c] * inv_c;
            }
    return leray_project(std::move(w));
}

double max_coeff_abs(const SpectralField& u) {
    double m = 0.0;
    for (const cdouble& c : u.raw()) m = std::max(m, std::abs(c));
    return m;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);
}

std::string read_bytes(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) return "<missing " + p.string() + ">";
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------

void criterion1_operator_identities() {
    bool pass = true;
    double worst = 0.0;
    for (int n : {8, 16}) {
        WaveLattice lat(n);
        for (int i = 0; i < 200; ++i) {
            const std::uint64_t s = std::uint64_t(1000 * n + 3 * i);
            SpectralField u = random_divfree_field(lat, CounterRng(s), 2, 1.0);
            SpectralField v = random_divfree_field(lat, CounterRng(s + 1), 2, 1.0);
            SpectralField w = random_divfree_field(lat, CounterRng(s + 2), 2, 1.0);
            const double scale =
                std::max(1.0, norm_h1(u) * norm_h1(v) * norm_h1(w));
            const double orth = std::abs(trilinear(u, u, u));
            const double anti = std::abs(trilinear(u, v, w) + trilinear(u, w, v));
            worst = std::max(worst, std::max(orth, anti) / scale);
            if (orth > 1e-10 * scale || anti > 1e-10 * scale) pass = false;
        }
    }

    WaveLattice lat8(8);
    double worst_b = 0.0;
    for (int i = 0; i < 3; ++i) {
        SpectralField u = random_divfree_field(lat8, CounterRng(77 + 2 * i), 2, 1.0);
        SpectralField v = random_divfree_field(lat8, CounterRng(78 + 2 * i), 2, 1.0);
        SpectralField fast = nonlinear_term(u, v);
        SpectralField slow = convolution_oracle(u, v);
        slow -= fast;
        const double rel = max_coeff_abs(slow) / std::max(1e-30, max_coeff_abs(fast));
        worst_b = std::max(worst_b, rel);
        if (rel > 1e-10) pass = false;
    }
    report(1, "operator identities and convolution reference", pass,
           "worst identity residual " + fmt(worst) + ", worst B mismatch " + fmt(worst_b) +
               ", tol 1e-10");
}

void criterion2_single_mode_oracle() {
    WaveLattice lat(8);
    ModelParams p(1.0, 1.0, lat);
    SpectralField u0 = shear_mode_field(lat, 1, 0, 0, 1, 1.0);  // E0 = 1

    auto error_at_t1 = [&](double dt) {
        TrajectoryRecord rec = integrate(u0, 0.0, 1.0, StepConfig(dt), p,
                                         ForcingSpec::zero(), {.sample_every = 1 << 30});
        const double nu = 1.0, nu0 = 1.0, e0 = 1.0, t = 1.0;
        const double exact =
            nu * e0 * std::exp(-2.0 * nu * t) / (nu + nu0 * e0 * (1.0 - std::exp(-2.0 * nu * t)));
        return std::abs(rec.energy.back() - exact) / exact;
    };

    const double e1 = error_at_t1(1e-3);
    const double e2 = error_at_t1(5e-4);
    const double ratio = e1 / e2;
    const bool pass = e1 <= 1e-5 && ratio >= 3.6 && ratio <= 4.4;
    report(2, "single-mode closed-form energy law", pass,
           "rel error " + fmt(e1) + " at dt 1e-3 (tol 1e-5), refinement ratio " + fmt(ratio) +
               " in [3.6, 4.4]");
}

void criterion3_inequality_suite() {
    WaveLattice lat(16);
    ModelParams p(1.0, 1.0, lat);
    StepConfig cfg(0.004);
    const IntegrateOptions opts{.sample_every = 5, .keep_snapshots = false};
    const double mu = p.mu0();

    struct Case {
        const char* name;
        ForcingSpec f;
        double tau, t_end;
    };
    SpectralField g_steady = shear_mode_field(lat, 1, 0, 0, 1, 0.3);
    SpectralField g_temp = shear_mode_field(lat, 0, 1, 0, 0, 0.3);
    std::vector<Case> cases;
    cases.push_back({"unforced", ForcingSpec::zero(), 0.0, 20.0});
    cases.push_back({"steady", ForcingSpec::steady(g_steady), 0.0, 20.0});
    cases.push_back({"tempered", ForcingSpec::tempered_exp(0.5, g_temp), -20.0, 0.0});

    bool pass = true;
    std::string detail;
    for (const Case& c : cases) {
        SpectralField u0 = random_divfree_field(lat, CounterRng(21), 2, 0.6);
        TrajectoryRecord rec = integrate(u0, c.tau, c.t_end, cfg, p, c.f, opts);
        InequalityVerdict vs[] = {verify_energy_inequality(rec, c.f, p),
                                  verify_decay_bound(rec, c.f, p, mu),
                                  verify_absorbing_radius(rec, c.f, p, mu),
                                  verify_time_avg_bounds(rec, c.f, p)};
        for (const InequalityVerdict& v : vs)
            if (!v.holds) {
                pass = false;
                detail += std::string(c.name) + "/" + v.name + " failed; ";
            }
    }
    if (detail.empty()) detail = "energy, decay, absorbing and time-average hold on all 3 runs";
    report(3, "a priori inequality suite at N=16, horizon 20", pass, detail);
}

void criterion4_pullback_convergence() {
    WaveLattice lat(16);
    ModelParams p(1.0, 1.0, lat);
    // radius 0.35, kmax 2 keeps cloud enstrophy <= 0.49, well inside the
    // explicit viscous budget 0.9/(0.49*75) ~ 2.4e-2 at this dt
    StepConfig cfg(0.008);
    const UniverseSpec uni = UniverseSpec::tempered(p.mu0(), RadiusFamily::constant, 0.35);

    ForcingSpec f = ForcingSpec::tempered_exp(0.5, shear_mode_field(lat, 1, 0, 0, 1, 0.1));
    AttractorEstimate est = attractor_estimate(0.0, {-5.0, -10.0, -20.0, -40.0}, uni, 3, 1e-6,
                                               11, cfg, p, f, DistanceNorm::h);
    bool pass = est.converged && est.cauchy_gap < 1e-6;
    for (std::size_t i = 1; i < est.gaps.size(); ++i)
        if (!(est.gaps[i] < est.gaps[i - 1])) pass = false;

    AttractorEstimate triv = attractor_estimate(0.0, {-5.0, -10.0, -20.0}, uni, 3, 1e-6, 11,
                                                cfg, p, ForcingSpec::zero(), DistanceNorm::h);
    if (!(triv.diameter < 1e-8)) pass = false;
    report(4, "pullback Cauchy convergence and trivial unforced limit", pass,
           "final gap " + fmt(est.cauchy_gap) + " < 1e-6 monotone, unforced diameter " +
               fmt(triv.diameter) + " < 1e-8");
}

void criterion5_universe_comparison() {
    WaveLattice lat(8);
    ModelParams p(1.0, 1.0, lat);
    StepConfig cfg(0.01);
    ForcingSpec f = ForcingSpec::steady(shear_mode_field(lat, 1, 0, 0, 1, 0.2));

    UniverseComparison cmp = compare_universes(
        0.0, {-4.0, -8.0, -16.0, -32.0}, UniverseSpec::fixed_bounded(0.5),
        UniverseSpec::tempered(0.5, RadiusFamily::constant, 0.5),
        UniverseSpec::tempered(p.mu0(), RadiusFamily::constant, 0.5), 3, 1e-6, 13, cfg, p, f,
        DistanceNorm::h);

    const double dmax = std::max({cmp.d_fixed_to_mid, cmp.d_mid_to_top, cmp.d_mid_to_fixed,
                                  cmp.d_top_to_mid, cmp.d_fixed_to_top, cmp.d_top_to_fixed});
    const bool pass = cmp.inclusion_ok && cmp.equality_applicable && cmp.equality_ok &&
                      dmax < 1e-6;
    report(5, "fixed vs tempered universe estimates coincide", pass,
           "max mutual semi-distance " + fmt(dmax) + " < 1e-6, inclusion and equality hold");
}

void criterion6_linearization() {
    WaveLattice lat(8);
    ModelParams p(1.0, 1.0, lat);
    StepConfig cfg(0.005);
    SpectralField u0 = random_divfree_field(lat, CounterRng(7), 2, 1.0);
    SpectralField xi = random_divfree_field(lat, CounterRng(8), 2, 1.0);
    const std::vector<double> deltas = {1e-2, 1e-3, 1e-4, 1e-5};

    auto table = uniform_differentiability_check(u0, xi, 0.0, 1.0, deltas,
                                                 LinearizationVariant::full_gateaux, cfg, p,
                                                 ForcingSpec::zero());
    std::vector<double> xs, ys;
    for (const auto& [d, r] : table) {
        xs.push_back(d);
        ys.push_back(r);
    }
    const double slope = loglog_slope(xs, ys);

    auto frozen = uniform_differentiability_check(u0, xi, 0.0, 1.0, deltas,
                                                  LinearizationVariant::paper_operator, cfg, p,
                                                  ForcingSpec::zero());
    const bool floor_ok = frozen.back().second > 0.5 * frozen.front().second &&
                          frozen.back().second > 10.0 * table.back().second;
    const bool pass = slope > 0.85 && slope < 1.15 && floor_ok;
    report(6, "uniform differentiability separates the linearization variants", pass,
           "remainder slope " + fmt(slope) + " in [0.85, 1.15], frozen-coefficient floor " +
               fmt(frozen.back().second));
}

void criterion7_trace_lyapunov() {
    WaveLattice lat(8);
    ModelParams p(1.0, 1.0, lat);
    bool pass = true;
    std::string detail;

    // rest state: q_n = -nu * (sum of the n smallest Stokes eigenvalues)
    TangentOptions rest_opts;
    rest_opts.initial_tangents = stokes_eigenbasis(lat, 13);
    TangentBundleResult rest = trace_sum(SpectralField(lat), 0.0, 1.0, 13, StepConfig(0.01), p,
                                         ForcingSpec::zero(), rest_opts);
    const double rest_err = std::max({std::abs(rest.q_prefix[2] + 3.0),
                                      std::abs(rest.q_prefix[11] + 12.0),
                                      std::abs(rest.q_prefix[12] + 14.0)});
    if (rest_err > 1e-8) {
        pass = false;
        detail += "rest-state trace error " + fmt(rest_err) + "; ";
    }

    // forced run: Lyapunov partial sums track the trace sums
    ForcingSpec f = ForcingSpec::steady(shear_mode_field(lat, 0, 1, 0, 0, 0.3));
    SpectralField u0 = shear_mode_field(lat, 1, 0, 0, 1, 0.5);
    TangentOptions opts;
    opts.initial_tangents = stokes_eigenbasis(lat, 4);
    TangentBundleResult res = trace_sum(u0, 0.0, 4.0, 4, StepConfig(0.005), p, f, opts);
    double worst_rel = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double rel = std::abs(res.partial_sums[i] - res.q_prefix[i]) /
                           std::abs(res.q_prefix[i]);
        worst_rel = std::max(worst_rel, rel);
    }
    if (worst_rel > 0.05) {
        pass = false;
        detail += "Lyapunov/trace mismatch " + fmt(worst_rel) + "; ";
    }
    for (int i = 1; i < 4; ++i)
        if (!(res.q_prefix[i] <= res.q_prefix[i - 1])) {
            pass = false;
            detail += "q_n not nonincreasing; ";
        }

    // unforced headline bound is exactly 3
    DimensionBoundReport bound =
        dimension_bound_report(p, grashof(ForcingSpec::zero(), p, 0.0, 1.0), 0.0, 1.0, 1.0, 12);
    if (bound.paper_bound != 3.0) {
        pass = false;
        detail += "unforced bound " + fmt(bound.paper_bound) + " != 3; ";
    }
    if (detail.empty())
        detail = "rest-state error " + fmt(rest_err) + ", Lyapunov/trace mismatch " +
                 fmt(worst_rel) + ", unforced bound 3";
    report(7, "trace sums, Lyapunov consistency and dimension bound", pass, detail);
}

void criterion8_semicontinuity_vw() {
    WaveLattice lat(8);
    ModelParams p(1.0, 1.0, lat);
    StepConfig cfg(0.01);
    ForcingSpec shape = ForcingSpec::steady(shear_mode_field(lat, 1, 0, 0, 1, 1.0));
    const UniverseSpec uni = UniverseSpec::tempered(p.mu0(), RadiusFamily::constant, 0.5);

    SemicontinuityReport rep =
        semicontinuity_experiment(0.0, {0.2, 0.1, 0.05, 0.025}, shape, {-4.0, -8.0, -16.0},
                                  uni, 3, 1e-3, 17, cfg, p, DistanceNorm::h);
    bool pass = rep.monotone && rep.slope_defined && rep.slope > 0.7 && rep.slope < 1.3;

    SpectralField u0 = random_divfree_field(lat, CounterRng(19), 2, 0.5);
    VwDiagnostics vw = vw_decomposition(u0, 0.0, 3.0, 0.1, shape, StepConfig(0.005), p, 10);
    double u_max = 0.0;
    for (double e : vw.u_energy) u_max = std::max(u_max, std::sqrt(e));
    const double rel_res = vw.max_residual / std::max(1e-30, u_max);
    if (!(rel_res < 1e-8) || !vw.v_decay_holds) pass = false;
    report(8, "upper semicontinuity in the forcing and v/w splitting", pass,
           "d(eps) slope " + fmt(rep.slope) + " in [0.7, 1.3] monotone, v/w residual " +
               fmt(rel_res) + " < 1e-8");
}

void criterion9_determinism() {
    const fs::path dir = fs::temp_directory_path() / "pblb_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "pullback.json";
    {
        std::ofstream os(cfg);
        os << R"({
  "model": {"nu": 1.0, "nu0": 1.0, "n": 8},
  "forcing": {"kind": "steady",
              "g": {"type": "shear", "k": [1, 0, 0], "dir": 1, "amplitude": 0.2}},
  "integrator": {"dt": 0.01},
  "seed": 23,
  "experiment": {
    "type": "pullback",
    "t": 0.0, "tau_schedule": [-2.0, -4.0, -6.0],
    "universe": {"kind": "tempered", "mu": 1.0, "family": "constant", "scale": 0.5},
    "n_members": 3, "tol": 0.01
  }
})";
    }
    auto run = [&](const char* threads, const fs::path& out) {
        const std::string cmd = std::string(PBLB_CLI_PATH) + " run --config " + cfg.string() +
                                " --out " + out.string() + " --threads " + threads +
                                " >/dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    const int c1 = run("1", dir / "t1");
    const int c4 = run("4", dir / "t4");
    bool pass = c1 == 0 && c4 == 0;
    for (const char* rel :
         {"manifest.json", "reports/pullback.json", "snapshots/member_000.pblb",
          "snapshots/member_001.pblb", "snapshots/member_002.pblb"})
        if (read_bytes(dir / "t1" / rel) != read_bytes(dir / "t4" / rel)) pass = false;
    report(9, "reports are byte-identical across thread counts", pass,
           "exit codes " + std::to_string(c1) + "/" + std::to_string(c4) +
               ", manifest, report and member snapshots compared");
}

}  // namespace

int main() {
    criterion1_operator_identities();
    criterion2_single_mode_oracle();
    criterion3_inequality_suite();
    criterion4_pullback_convergence();
    criterion5_universe_comparison();
    criterion6_linearization();
    criterion7_trace_lyapunov();
    criterion8_semicontinuity_vw();
    criterion9_determinism();
    if (g_failures == 0) {
        std::printf("acceptance: all 9 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return 1;
}
