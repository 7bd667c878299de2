#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "pblb/config.hpp"
#include "pblb/report.hpp"
#include "pblb/snapshot.hpp"

namespace pblb {

/// Exit codes of the experiment runner (config errors are raised before any
/// compute and map to 2 in the CLI; blow-up raises BlowupError, mapped to 3).
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerdictFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitBlowup = 3;

namespace rundetail {

namespace fs = std::filesystem;

inline void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline void write_manifest(const RunConfig& cfg, const fs::path& out) {
    Json m = Json::object();
    m.set("format_version", Json::integer(1));
    m.set("config_hash", Json::str(hex64(cfg.config_hash)));
    m.set("experiment", Json::str(cfg.experiment_name()));
    m.set("lattice_n", Json::integer(cfg.n));
    m.set("seed", cfg.has_seed ? Json::integer(static_cast<long long>(cfg.seed)) : Json::null());
    write_file(out / "manifest.json", m.dump() + "\n");
}

inline void write_trajectory(const TrajectoryRecord& rec, const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    for (std::size_t i = 0; i < rec.size(); ++i) {
        Json line = Json::object();
        line.set("t", Json::number(rec.times[i]));
        line.set("energy", Json::number(rec.energy[i]));
        line.set("enstrophy", Json::number(rec.enstrophy[i]));
        line.set("quartic", Json::number(rec.quartic[i]));
        line.set("frac14", Json::number(rec.frac14[i]));
        line.set("work", Json::number(rec.work[i]));
        os << line.dump() << "\n";
    }
}

inline Json verdict_json(const InequalityVerdict& v) {
    Json j = Json::object();
    j.set("holds", Json::boolean(v.holds));
    j.set("margin", Json::number(v.margin));
    j.set("worst_time", Json::number(v.worst_time));
    j.set("slack", Json::number(v.slack));
    Json c = Json::object();
    for (const auto& [k, val] : v.constants) c.set(k, Json::number(val));
    j.set("constants", std::move(c));
    return j;
}

inline void save_cloud(const EnsembleCloud& cloud, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < cloud.members.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "member_%03zu.pblb", i);
        save_snapshot(cloud.members[i], (dir / name).string());
    }
}

inline int run_simulate(const RunConfig& cfg, const fs::path& out, bool verify) {
    const WaveLattice lat = cfg.lattice();
    const ModelParams p = cfg.model();
    const ForcingSpec f = cfg.build_forcing();
    const SimulateSpec& s = cfg.simulate;

    TrajectoryRecord rec = integrate(s.u0.build(lat), s.tau, s.t_end, cfg.step, p, f,
                                     {.sample_every = s.sample_every,
                                      .keep_snapshots = s.keep_snapshots});
    write_trajectory(rec, out / "trajectory.jsonl");
    if (s.keep_snapshots) {
        fs::create_directories(out / "snapshots");
        for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "sample_%06zu.pblb", i);
            save_snapshot(rec.snapshots[i], (out / "snapshots" / name).string());
        }
    }

    Json summary = Json::object();
    summary.set("samples", Json::integer(static_cast<long long>(rec.size())));
    summary.set("t_start", Json::number(rec.times.front()));
    summary.set("t_end", Json::number(rec.times.back()));
    summary.set("final_energy", Json::number(rec.energy.back()));
    summary.set("final_enstrophy", Json::number(rec.enstrophy.back()));
    summary.set("max_budget_residual", Json::number(energy_budget(rec).max_abs));
    const GrashofReport gr = grashof(f, p, rec.times.back(),
                                     rec.times.back() - rec.times.front());
    if (gr.present) {
        summary.set("grashof_sup", Json::number(gr.g_sup));
        summary.set("grashof_generalized", Json::number(gr.g_gen));
    }
    fs::create_directories(out / "reports");

    if (!verify) {
        write_file(out / "reports" / "simulate.json", summary.dump() + "\n");
        return kExitOk;
    }

    const double mu = s.mu > 0.0 ? s.mu : p.mu0();
    Json verdicts = Json::object();
    bool all_hold = true;
    auto add = [&](const char* name, const InequalityVerdict& v) {
        verdicts.set(name, verdict_json(v));
        all_hold = all_hold && v.holds;
    };
    add("energy_inequality", verify_energy_inequality(rec, f, p));
    add("decay_bound", verify_decay_bound(rec, f, p, mu));
    try {
        add("absorbing_radius", verify_absorbing_radius(rec, f, p, mu));
    } catch (const std::runtime_error& e) {
        Json j = Json::object();
        j.set("holds", Json::boolean(false));
        j.set("error", Json::str(e.what()));
        verdicts.set("absorbing_radius", std::move(j));
        all_hold = false;
    }
    add("time_avg_bounds", verify_time_avg_bounds(rec, f, p));

    Json rep = Json::object();
    rep.set("mu", Json::number(mu));
    rep.set("all_hold", Json::boolean(all_hold));
    rep.set("verdicts", std::move(verdicts));
    rep.set("summary", std::move(summary));
    write_file(out / "reports" / "verdicts.json", rep.dump() + "\n");
    return all_hold ? kExitOk : kExitVerdictFailure;
}

inline int run_pullback(const RunConfig& cfg, const fs::path& out, int threads) {
    const ModelParams p = cfg.model();
    const ForcingSpec f = cfg.build_forcing();
    const PullbackSpec& s = cfg.pullback;
    const DistanceNorm nm = s.norm == "h" ? DistanceNorm::h : DistanceNorm::frac14;

    AttractorEstimate est = attractor_estimate(s.t, s.tau_schedule, s.universe.build(),
                                               s.n_members, s.tol, cfg.seed, cfg.step, p, f,
                                               nm, threads);
    Json rep = Json::object();
    rep.set("t", Json::number(est.t));
    rep.set("tau_schedule", Json::array(est.tau_schedule));
    rep.set("gaps", Json::array(est.gaps));
    rep.set("cauchy_gap", Json::number(est.cauchy_gap));
    rep.set("diameter", Json::number(est.diameter));
    rep.set("converged", Json::boolean(est.converged));
    rep.set("members", Json::integer(static_cast<long long>(est.cloud.members.size())));
    Json errs = Json::array();
    for (const auto& e : est.cloud.member_errors) errs.push(Json::str(e));
    rep.set("member_errors", std::move(errs));

    if (p.nu0 > 0.0) {
        const NontrivialityReport nt =
            nontriviality_check(est, p, f, s.grashof_window, s.tol, s.threshold_c);
        Json ntj = Json::object();
        ntj.set("g_gen", Json::number(nt.g_gen));
        ntj.set("threshold", Json::number(nt.threshold));
        ntj.set("c", Json::number(nt.c));
        ntj.set("diameter", Json::number(nt.diameter));
        ntj.set("trivial", Json::boolean(nt.trivial));
        ntj.set("threshold_exceeded", Json::boolean(nt.threshold_exceeded));
        ntj.set("prediction_matched", Json::boolean(nt.prediction_matched));
        rep.set("nontriviality", std::move(ntj));
    }

    fs::create_directories(out / "reports");
    write_file(out / "reports" / "pullback.json", rep.dump() + "\n");
    save_cloud(est.cloud, out / "snapshots");
    return est.converged ? kExitOk : kExitVerdictFailure;
}

inline int run_compare(const RunConfig& cfg, const fs::path& out, int threads) {
    const ModelParams p = cfg.model();
    const ForcingSpec f = cfg.build_forcing();
    const CompareSpec& s = cfg.compare;
    const DistanceNorm nm = s.norm == "h" ? DistanceNorm::h : DistanceNorm::frac14;

    Json rep = Json::object();
    int code = kExitOk;
    try {
        UniverseComparison cmp = compare_universes(
            s.t, s.tau_schedule, UniverseSpec::fixed_bounded(s.fixed_radius),
            UniverseSpec::tempered(s.mu_mid, RadiusFamily::constant, s.tempered_scale),
            UniverseSpec::tempered(s.mu_top, RadiusFamily::constant, s.tempered_scale),
            s.n_members, s.tol, cfg.seed, cfg.step, p, f, nm, threads);
        rep.set("converged", Json::boolean(true));
        rep.set("d_fixed_to_mid", Json::number(cmp.d_fixed_to_mid));
        rep.set("d_mid_to_top", Json::number(cmp.d_mid_to_top));
        rep.set("d_mid_to_fixed", Json::number(cmp.d_mid_to_fixed));
        rep.set("d_top_to_mid", Json::number(cmp.d_top_to_mid));
        rep.set("d_fixed_to_top", Json::number(cmp.d_fixed_to_top));
        rep.set("d_top_to_fixed", Json::number(cmp.d_top_to_fixed));
        rep.set("inclusion_ok", Json::boolean(cmp.inclusion_ok));
        rep.set("equality_applicable", Json::boolean(cmp.equality_applicable));
        rep.set("equality_ok", Json::boolean(cmp.equality_ok));
        if (!cmp.inclusion_ok) code = kExitVerdictFailure;
    } catch (const std::runtime_error& e) {
        rep.set("converged", Json::boolean(false));
        rep.set("error", Json::str(e.what()));
        code = kExitVerdictFailure;
    }
    rep.set("tol", Json::number(s.tol));
    fs::create_directories(out / "reports");
    write_file(out / "reports" / "compare_universes.json", rep.dump() + "\n");
    return code;
}

inline int run_dimension(const RunConfig& cfg, const fs::path& out) {
    const WaveLattice lat = cfg.lattice();
    const ModelParams p = cfg.model();
    const ForcingSpec f = cfg.build_forcing();
    const DimensionSpec& s = cfg.dimension;

    TangentOptions opts;
    opts.variant = s.variant == "full_gateaux" ? LinearizationVariant::full_gateaux
                                               : LinearizationVariant::paper_operator;
    opts.reorth_interval = s.reorth_interval;
    opts.seed = cfg.seed;
    if (s.eigen_tangents) opts.initial_tangents = stokes_eigenbasis(lat, s.n);

    TangentBundleResult res = trace_sum(s.u0.build(lat), s.tau, s.t_end, s.n, cfg.step, p, f,
                                        opts);

    const double window = s.grashof_window;
    const double M = f.is_zero() ? 0.0
                                 : f.window_average_sq(s.t_end, window, ForcingNorm::v_dual, lat);
    const GrashofReport gr = grashof(f, p, s.t_end, window);
    DimensionBoundReport bound = dimension_bound_report(p, gr, M, s.trilinear_c, s.c_f,
                                                        s.n_max, res.q_prefix);

    Json rep = Json::object();
    rep.set("n", Json::integer(res.n));
    rep.set("variant", Json::str(s.variant));
    rep.set("q_n", Json::number(res.q_n));
    rep.set("q_n_tail", Json::number(res.q_n_tail));
    rep.set("q_prefix", Json::array(res.q_prefix));
    rep.set("exponents", Json::array(res.exponents));
    rep.set("partial_sums", Json::array(res.partial_sums));
    rep.set("kaplan_yorke", Json::number(res.kaplan_yorke));
    rep.set("bound_curve", Json::array(bound.bound_curve));
    rep.set("n_star", Json::integer(bound.n_star));
    rep.set("paper_bound", Json::number(bound.paper_bound));
    rep.set("additive_constant", Json::number(bound.additive_constant));
    rep.set("weyl_constant", Json::number(bound.weyl_constant));
    rep.set("M", Json::number(bound.M));
    rep.set("measured_crossing", Json::integer(bound.measured_crossing));
    fs::create_directories(out / "reports");
    write_file(out / "reports" / "dimension.json", rep.dump() + "\n");
    return kExitOk;
}

inline int run_semicontinuity(const RunConfig& cfg, const fs::path& out, int threads) {
    const ModelParams p = cfg.model();
    const SemicontinuitySpec& s = cfg.semicontinuity;
    const ForcingSpec shape = cfg.build_forcing();

    SemicontinuityReport rep = semicontinuity_experiment(
        s.t, s.eps_list, shape, s.tau_schedule, s.universe.build(), s.n_members, s.tol,
        cfg.seed, cfg.step, p, DistanceNorm::h, threads);

    Json j = Json::object();
    j.set("eps", Json::array(rep.eps));
    j.set("d", Json::array(rep.d));
    j.set("slope", rep.slope_defined ? Json::number(rep.slope) : Json::null());
    j.set("monotone", Json::boolean(rep.monotone));
    j.set("tol", Json::number(rep.tol));
    fs::create_directories(out / "reports");
    write_file(out / "reports" / "semicontinuity.json", j.dump() + "\n");
    return rep.monotone ? kExitOk : kExitVerdictFailure;
}

}  // namespace rundetail

/// Executes the configured experiment, writing all artifacts under out_dir.
/// Returns the CLI exit code (0 ok, 1 verdict failure). Throws BlowupError on
/// numerical blow-up and std::runtime_error on I/O problems.
inline int run_experiment(const RunConfig& cfg, const std::string& out_dir, int threads = 0) {
    namespace fs = std::filesystem;
    const fs::path out(out_dir);
    fs::create_directories(out);
    rundetail::write_manifest(cfg, out);
    switch (cfg.type) {
        case ExperimentType::simulate: return rundetail::run_simulate(cfg, out, false);
        case ExperimentType::verify: return rundetail::run_simulate(cfg, out, true);
        case ExperimentType::pullback: return rundetail::run_pullback(cfg, out, threads);
        case ExperimentType::compare_universes: return rundetail::run_compare(cfg, out, threads);
        case ExperimentType::dimension: return rundetail::run_dimension(cfg, out);
        case ExperimentType::semicontinuity:
            return rundetail::run_semicontinuity(cfg, out, threads);
    }
    return kExitConfigError;
}

/// Human-readable dry-run plan: resolved parameters and derived quantities,
/// no compute and no artifacts.
inline std::string describe_experiment(const RunConfig& cfg) {
    std::ostringstream os;
    os.precision(12);
    os << "experiment: " << cfg.experiment_name() << "\n";
    os << "lattice: N = " << cfg.n << ", dealias limit "
       << cfg.lattice().dealias_limit() << ", lambda_1 = " << kLambda1 << "\n";
    os << "model: nu = " << cfg.nu << ", nu0 = " << cfg.nu0
       << ", mu0 = nu*lambda_1 = " << cfg.nu * kLambda1 << "\n";
    os << "integrator: dt = " << cfg.step.dt << ", scheme = "
       << (cfg.step.scheme == Scheme::etd2 ? "etd2" : "imex_cn_ab2") << ", viscosity = "
       << (cfg.step.viscosity_mode == ViscosityMode::explicit_coeff ? "explicit" : "picard")
       << "\n";
    os << "forcing: " << cfg.forcing.kind;
    if (cfg.forcing.kind == "tempered_exp")
        os << " (closed-form tempered integral: e^{(mu+2*" << cfg.forcing.sigma
           << ")t} |g|^2 / (mu + 2*" << cfg.forcing.sigma << "))";
    os << "\n";
    os << "absorbing radius inputs: rho_0^2(t) = 1 + (4/(nu*lambda_1)) * "
          "int e^{-mu(t-s)} |f(s)|_{V'}^2 ds with nu*lambda_1 = "
       << cfg.nu * kLambda1 << "\n";
    if (cfg.nu0 > 0.0)
        os << "grashof inputs: nu0^2*lambda_1 = " << cfg.nu0 * cfg.nu0 * kLambda1 << "\n";

    double work = 0.0;  // estimated steps
    const double per_step = 1.0;
    switch (cfg.type) {
        case ExperimentType::simulate:
        case ExperimentType::verify:
            work = (cfg.simulate.t_end - cfg.simulate.tau) / cfg.step.dt;
            break;
        case ExperimentType::pullback:
            for (double tau : cfg.pullback.tau_schedule)
                work += cfg.pullback.n_members * (cfg.pullback.t - tau) / cfg.step.dt;
            break;
        case ExperimentType::compare_universes:
            for (double tau : cfg.compare.tau_schedule)
                work += 3.0 * cfg.compare.n_members * (cfg.compare.t - tau) / cfg.step.dt;
            break;
        case ExperimentType::dimension:
            work = (1.0 + cfg.dimension.n) * (cfg.dimension.t_end - cfg.dimension.tau) /
                   cfg.step.dt;
            break;
        case ExperimentType::semicontinuity:
            for (double tau : cfg.semicontinuity.tau_schedule)
                work += cfg.semicontinuity.eps_list.size() * cfg.semicontinuity.n_members *
                        (cfg.semicontinuity.t - tau) / cfg.step.dt;
            break;
    }
    os << "estimated work: " << static_cast<long long>(work * per_step) << " step units\n";
    return os.str();
}

}  // namespace pblb
