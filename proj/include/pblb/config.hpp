#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pblb/forcing.hpp"
#include "pblb/integrator.hpp"
#include "pblb/pullback.hpp"
#include "pblb/rng.hpp"
#include "pblb/tangent.hpp"

namespace pblb {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error("config: " + msg) {}
};

namespace cfgdetail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::string& where,
                           std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

inline const json& require(const json& j, const std::string& where, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing required key '" + key + "'");
    return *it;
}

inline double num(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError(field + " must be a number");
    return j.get<double>();
}
inline long long intval(const json& j, const std::string& field) {
    if (!j.is_number_integer()) throw ConfigError(field + " must be an integer");
    return j.get<long long>();
}
inline std::string strval(const json& j, const std::string& field) {
    if (!j.is_string()) throw ConfigError(field + " must be a string");
    return j.get<std::string>();
}
inline bool boolval(const json& j, const std::string& field) {
    if (!j.is_boolean()) throw ConfigError(field + " must be a boolean");
    return j.get<bool>();
}
inline std::vector<double> numlist(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw ConfigError(field + " must be a nonempty array");
    std::vector<double> out;
    for (const auto& x : j) out.push_back(num(x, field + " entry"));
    return out;
}

}  // namespace cfgdetail

/// Deferred initial-data / forcing-profile field description; realized on a
/// concrete lattice at run time.
struct FieldInit {
    enum class Kind { zero, shear, random } kind = Kind::zero;
    int k[3] = {1, 0, 0};
    int dir = 1;
    double amplitude = 1.0;
    std::uint64_t seed = 0;
    int kmax = 2;
    double h_norm = 1.0;

    static FieldInit parse(const cfgdetail::json& j, const std::string& where) {
        using namespace cfgdetail;
        FieldInit f;
        const std::string type = strval(require(j, where, "type"), where + ".type");
        if (type == "zero") {
            reject_unknown(j, where, {"type"});
            f.kind = Kind::zero;
        } else if (type == "shear") {
            reject_unknown(j, where, {"type", "k", "dir", "amplitude"});
            const json& kj = require(j, where, "k");
            if (!kj.is_array() || kj.size() != 3)
                throw ConfigError(where + ".k must be an array of 3 integers");
            for (int i = 0; i < 3; ++i) f.k[i] = int(intval(kj[i], where + ".k"));
            f.dir = int(intval(require(j, where, "dir"), where + ".dir"));
            if (f.dir < 0 || f.dir > 2) throw ConfigError(where + ".dir must be 0, 1 or 2");
            f.amplitude = num(require(j, where, "amplitude"), where + ".amplitude");
            f.kind = Kind::shear;
        } else if (type == "random") {
            reject_unknown(j, where, {"type", "seed", "kmax", "h_norm"});
            f.seed = std::uint64_t(intval(require(j, where, "seed"), where + ".seed"));
            if (j.contains("kmax")) f.kmax = int(intval(j["kmax"], where + ".kmax"));
            if (j.contains("h_norm")) f.h_norm = num(j["h_norm"], where + ".h_norm");
            if (f.kmax < 1) throw ConfigError(where + ".kmax must be >= 1");
            if (!(f.h_norm > 0.0)) throw ConfigError(where + ".h_norm must be > 0");
            f.kind = Kind::random;
        } else
            throw ConfigError(where + ".type must be zero, shear or random");
        return f;
    }

    SpectralField build(const WaveLattice& lat) const {
        switch (kind) {
            case Kind::zero: return SpectralField(lat);
            case Kind::shear: return shear_mode_field(lat, k[0], k[1], k[2], dir, amplitude);
            case Kind::random: return random_divfree_field(lat, CounterRng(seed), kmax, h_norm);
        }
        return SpectralField(lat);
    }
};

/// Deferred forcing description, mirroring the ForcingSpec catalog.
struct ForcingInit {
    std::string kind = "zero";
    double sigma = 0.0;
    double eps = 0.0;
    std::vector<double> omegas;
    std::vector<FieldInit> fields;
    std::vector<ForcingInit> inner;  // 0 or 1 entries (eps_scaled)

    static ForcingInit parse(const cfgdetail::json& j, const std::string& where) {
        using namespace cfgdetail;
        ForcingInit f;
        f.kind = strval(require(j, where, "kind"), where + ".kind");
        if (f.kind == "zero") {
            reject_unknown(j, where, {"kind"});
        } else if (f.kind == "steady") {
            reject_unknown(j, where, {"kind", "g"});
            f.fields.push_back(FieldInit::parse(require(j, where, "g"), where + ".g"));
        } else if (f.kind == "tempered_exp") {
            reject_unknown(j, where, {"kind", "sigma", "g"});
            f.sigma = num(require(j, where, "sigma"), where + ".sigma");
            if (!(f.sigma > 0.0)) throw ConfigError(where + ".sigma must be > 0");
            f.fields.push_back(FieldInit::parse(require(j, where, "g"), where + ".g"));
        } else if (f.kind == "quasi_periodic") {
            reject_unknown(j, where, {"kind", "omegas", "gs"});
            f.omegas = numlist(require(j, where, "omegas"), where + ".omegas");
            const json& gs = require(j, where, "gs");
            if (!gs.is_array() || gs.size() != f.omegas.size())
                throw ConfigError(where + ".gs must match omegas in length");
            for (std::size_t i = 0; i < gs.size(); ++i)
                f.fields.push_back(FieldInit::parse(gs[i], where + ".gs"));
        } else if (f.kind == "eps_scaled") {
            reject_unknown(j, where, {"kind", "eps", "inner"});
            f.eps = num(require(j, where, "eps"), where + ".eps");
            if (!(f.eps >= 0.0)) throw ConfigError(where + ".eps must be >= 0");
            f.inner.push_back(ForcingInit::parse(require(j, where, "inner"), where + ".inner"));
        } else
            throw ConfigError(where + ".kind must be one of zero, steady, tempered_exp, "
                              "quasi_periodic, eps_scaled");
        return f;
    }

    ForcingSpec build(const WaveLattice& lat) const {
        if (kind == "zero") return ForcingSpec::zero();
        if (kind == "steady") return ForcingSpec::steady(fields[0].build(lat));
        if (kind == "tempered_exp") return ForcingSpec::tempered_exp(sigma, fields[0].build(lat));
        if (kind == "quasi_periodic") {
            std::vector<SpectralField> gs;
            for (const auto& f : fields) gs.push_back(f.build(lat));
            return ForcingSpec::quasi_periodic(omegas, gs);
        }
        return ForcingSpec::eps_scaled(eps, inner[0].build(lat));
    }
};

struct UniverseInit {
    std::string kind = "fixed_bounded";
    double radius = 1.0;
    double mu = 1.0;
    std::string family = "constant";
    double scale = 1.0;
    double param = 0.0;

    static UniverseInit parse(const cfgdetail::json& j, const std::string& where) {
        using namespace cfgdetail;
        UniverseInit u;
        u.kind = strval(require(j, where, "kind"), where + ".kind");
        if (u.kind == "fixed_bounded") {
            reject_unknown(j, where, {"kind", "radius"});
            u.radius = num(require(j, where, "radius"), where + ".radius");
        } else if (u.kind == "tempered") {
            reject_unknown(j, where, {"kind", "mu", "family", "scale", "param"});
            u.mu = num(require(j, where, "mu"), where + ".mu");
            u.family = strval(require(j, where, "family"), where + ".family");
            if (u.family != "constant" && u.family != "polynomial" && u.family != "subexp")
                throw ConfigError(where + ".family must be constant, polynomial or subexp");
            u.scale = num(require(j, where, "scale"), where + ".scale");
            if (j.contains("param")) u.param = num(j["param"], where + ".param");
        } else
            throw ConfigError(where + ".kind must be fixed_bounded or tempered");
        return u;
    }

    UniverseSpec build() const {
        if (kind == "fixed_bounded") return UniverseSpec::fixed_bounded(radius);
        RadiusFamily fam = family == "constant" ? RadiusFamily::constant
                           : family == "polynomial" ? RadiusFamily::polynomial
                                                    : RadiusFamily::subexp;
        return UniverseSpec::tempered(mu, fam, scale, param);
    }
};

enum class ExperimentType { simulate, verify, pullback, dimension, semicontinuity,
                            compare_universes };

struct SimulateSpec {
    FieldInit u0;
    double tau = 0.0, t_end = 1.0;
    int sample_every = 1;
    bool keep_snapshots = false;
    double mu = 0.0;  // verify only; 0 means "use mu0"
};

struct PullbackSpec {
    double t = 0.0;
    std::vector<double> tau_schedule;
    UniverseInit universe;
    int n_members = 4;
    double tol = 1e-6;
    std::string norm = "h";
    double grashof_window = 5.0;
    double threshold_c = 1.0;
};

struct CompareSpec {
    double t = 0.0;
    std::vector<double> tau_schedule;
    double fixed_radius = 1.0;
    double mu_mid = 0.5;
    double mu_top = 1.0;
    double tempered_scale = 1.0;
    int n_members = 4;
    double tol = 1e-6;
    std::string norm = "h";
};

struct DimensionSpec {
    FieldInit u0;
    double tau = 0.0, t_end = 1.0;
    int n = 1;
    std::string variant = "full_gateaux";
    int reorth_interval = 1;
    bool eigen_tangents = true;
    double trilinear_c = 1.0;
    double c_f = 1.0;
    int n_max = 12;
    double grashof_window = 5.0;
};

struct SemicontinuitySpec {
    double t = 0.0;
    std::vector<double> eps_list;
    std::vector<double> tau_schedule;
    UniverseInit universe;
    int n_members = 4;
    double tol = 1e-3;
};

struct RunConfig {
    double nu = 1.0, nu0 = 1.0;
    int n = 8;
    double dealias_cut = 2.0 / 3.0;
    ForcingInit forcing;
    StepConfig step;
    ExperimentType type = ExperimentType::simulate;
    SimulateSpec simulate;
    PullbackSpec pullback;
    CompareSpec compare;
    DimensionSpec dimension;
    SemicontinuitySpec semicontinuity;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::uint64_t config_hash = 0;

    WaveLattice lattice() const { return WaveLattice(n, dealias_cut); }
    ModelParams model() const { return ModelParams(nu, nu0, lattice()); }
    ForcingSpec build_forcing() const { return forcing.build(lattice()); }

    const char* experiment_name() const {
        switch (type) {
            case ExperimentType::simulate: return "simulate";
            case ExperimentType::verify: return "verify";
            case ExperimentType::pullback: return "pullback";
            case ExperimentType::dimension: return "dimension";
            case ExperimentType::semicontinuity: return "semicontinuity";
            case ExperimentType::compare_universes: return "compare_universes";
        }
        return "?";
    }
};

inline std::uint64_t fnv1a_hash(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline RunConfig parse_config(const std::string& text) {
    using namespace cfgdetail;
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    reject_unknown(j, "config", {"model", "forcing", "integrator", "experiment", "output",
                                 "seed"});

    RunConfig cfg;
    cfg.config_hash = fnv1a_hash(text);

    const json& m = require(j, "config", "model");
    reject_unknown(m, "model", {"nu", "nu0", "n", "dealias_cut"});
    cfg.nu = num(require(m, "model", "nu"), "model.nu");
    cfg.nu0 = num(require(m, "model", "nu0"), "model.nu0");
    cfg.n = int(intval(require(m, "model", "n"), "model.n"));
    if (m.contains("dealias_cut")) cfg.dealias_cut = num(m["dealias_cut"], "model.dealias_cut");
    if (!(cfg.nu > 0.0)) throw ConfigError("model.nu must be > 0");
    if (!(cfg.nu0 >= 0.0)) throw ConfigError("model.nu0 must be >= 0");
    if (cfg.n < 4 || (cfg.n & (cfg.n - 1)) != 0)
        throw ConfigError("model.n must be a power of two >= 4");
    if (!(cfg.dealias_cut > 0.0 && cfg.dealias_cut <= 1.0))
        throw ConfigError("model.dealias_cut must be in (0, 1]");

    cfg.forcing = ForcingInit::parse(require(j, "config", "forcing"), "forcing");

    const json& integ = require(j, "config", "integrator");
    reject_unknown(integ, "integrator", {"dt", "scheme", "viscosity_mode", "cfl_safety",
                                         "picard_max_iter", "picard_tol"});
    cfg.step.dt = num(require(integ, "integrator", "dt"), "integrator.dt");
    if (!(cfg.step.dt > 0.0)) throw ConfigError("integrator.dt must be > 0");
    if (integ.contains("scheme")) {
        const std::string s = strval(integ["scheme"], "integrator.scheme");
        if (s == "etd2") cfg.step.scheme = Scheme::etd2;
        else if (s == "imex_cn_ab2") cfg.step.scheme = Scheme::imex_cn_ab2;
        else throw ConfigError("integrator.scheme must be etd2 or imex_cn_ab2");
    }
    if (integ.contains("viscosity_mode")) {
        const std::string s = strval(integ["viscosity_mode"], "integrator.viscosity_mode");
        if (s == "explicit") cfg.step.viscosity_mode = ViscosityMode::explicit_coeff;
        else if (s == "picard") cfg.step.viscosity_mode = ViscosityMode::picard;
        else throw ConfigError("integrator.viscosity_mode must be explicit or picard");
    }
    if (integ.contains("cfl_safety"))
        cfg.step.cfl_safety = num(integ["cfl_safety"], "integrator.cfl_safety");
    if (integ.contains("picard_max_iter"))
        cfg.step.picard.max_iter = int(intval(integ["picard_max_iter"], "integrator.picard_max_iter"));
    if (integ.contains("picard_tol"))
        cfg.step.picard.tol = num(integ["picard_tol"], "integrator.picard_tol");
    try {
        cfg.step.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("integrator: ") + e.what());
    }

    if (j.contains("output")) cfg.out_dir = strval(j["output"], "output");
    if (j.contains("seed")) {
        cfg.seed = std::uint64_t(intval(j["seed"], "seed"));
        cfg.has_seed = true;
    }

    const json& ex = require(j, "config", "experiment");
    const std::string type = strval(require(ex, "experiment", "type"), "experiment.type");

    auto parse_sim = [&](const json& e, bool with_mu) {
        if (with_mu)
            reject_unknown(e, "experiment", {"type", "u0", "tau", "t_end", "sample_every",
                                             "keep_snapshots", "mu"});
        else
            reject_unknown(e, "experiment", {"type", "u0", "tau", "t_end", "sample_every",
                                             "keep_snapshots"});
        SimulateSpec s;
        s.u0 = FieldInit::parse(require(e, "experiment", "u0"), "experiment.u0");
        s.tau = num(require(e, "experiment", "tau"), "experiment.tau");
        s.t_end = num(require(e, "experiment", "t_end"), "experiment.t_end");
        if (!(s.tau < s.t_end)) throw ConfigError("experiment.tau must be < experiment.t_end");
        if (e.contains("sample_every"))
            s.sample_every = int(intval(e["sample_every"], "experiment.sample_every"));
        if (s.sample_every < 1) throw ConfigError("experiment.sample_every must be >= 1");
        if (e.contains("keep_snapshots"))
            s.keep_snapshots = boolval(e["keep_snapshots"], "experiment.keep_snapshots");
        if (with_mu && e.contains("mu")) {
            s.mu = num(e["mu"], "experiment.mu");
            if (!(s.mu > 0.0)) throw ConfigError("experiment.mu must be > 0");
        }
        return s;
    };

    auto parse_schedule = [&](const json& e) {
        std::vector<double> sched = numlist(require(e, "experiment", "tau_schedule"),
                                            "experiment.tau_schedule");
        for (std::size_t i = 1; i < sched.size(); ++i)
            if (!(sched[i] < sched[i - 1]))
                throw ConfigError("experiment.tau_schedule must be strictly decreasing");
        return sched;
    };

    if (type == "simulate") {
        cfg.type = ExperimentType::simulate;
        cfg.simulate = parse_sim(ex, false);
    } else if (type == "verify") {
        cfg.type = ExperimentType::verify;
        cfg.simulate = parse_sim(ex, true);
    } else if (type == "pullback") {
        cfg.type = ExperimentType::pullback;
        reject_unknown(ex, "experiment", {"type", "t", "tau_schedule", "universe", "n_members",
                                          "tol", "norm", "grashof_window", "threshold_c"});
        cfg.pullback.t = num(require(ex, "experiment", "t"), "experiment.t");
        cfg.pullback.tau_schedule = parse_schedule(ex);
        cfg.pullback.universe = UniverseInit::parse(require(ex, "experiment", "universe"),
                                                    "experiment.universe");
        cfg.pullback.n_members = int(intval(require(ex, "experiment", "n_members"),
                                            "experiment.n_members"));
        cfg.pullback.tol = num(require(ex, "experiment", "tol"), "experiment.tol");
        if (ex.contains("norm")) cfg.pullback.norm = strval(ex["norm"], "experiment.norm");
        if (cfg.pullback.norm != "h" && cfg.pullback.norm != "frac14")
            throw ConfigError("experiment.norm must be h or frac14");
        if (ex.contains("grashof_window"))
            cfg.pullback.grashof_window = num(ex["grashof_window"], "experiment.grashof_window");
        if (ex.contains("threshold_c"))
            cfg.pullback.threshold_c = num(ex["threshold_c"], "experiment.threshold_c");
    } else if (type == "compare_universes") {
        cfg.type = ExperimentType::compare_universes;
        reject_unknown(ex, "experiment", {"type", "t", "tau_schedule", "fixed_radius", "mu_mid",
                                          "mu_top", "tempered_scale", "n_members", "tol", "norm"});
        cfg.compare.t = num(require(ex, "experiment", "t"), "experiment.t");
        cfg.compare.tau_schedule = parse_schedule(ex);
        cfg.compare.fixed_radius = num(require(ex, "experiment", "fixed_radius"),
                                       "experiment.fixed_radius");
        cfg.compare.mu_mid = num(require(ex, "experiment", "mu_mid"), "experiment.mu_mid");
        cfg.compare.mu_top = num(require(ex, "experiment", "mu_top"), "experiment.mu_top");
        if (!(cfg.compare.mu_mid <= cfg.compare.mu_top))
            throw ConfigError("experiment.mu_mid must be <= experiment.mu_top");
        if (ex.contains("tempered_scale"))
            cfg.compare.tempered_scale = num(ex["tempered_scale"], "experiment.tempered_scale");
        cfg.compare.n_members = int(intval(require(ex, "experiment", "n_members"),
                                           "experiment.n_members"));
        cfg.compare.tol = num(require(ex, "experiment", "tol"), "experiment.tol");
        if (ex.contains("norm")) cfg.compare.norm = strval(ex["norm"], "experiment.norm");
    } else if (type == "dimension") {
        cfg.type = ExperimentType::dimension;
        reject_unknown(ex, "experiment", {"type", "u0", "tau", "t_end", "n", "variant",
                                          "reorth_interval", "eigen_tangents", "trilinear_c",
                                          "c_f", "n_max", "grashof_window"});
        cfg.dimension.u0 = FieldInit::parse(require(ex, "experiment", "u0"), "experiment.u0");
        cfg.dimension.tau = num(require(ex, "experiment", "tau"), "experiment.tau");
        cfg.dimension.t_end = num(require(ex, "experiment", "t_end"), "experiment.t_end");
        if (!(cfg.dimension.tau < cfg.dimension.t_end))
            throw ConfigError("experiment.tau must be < experiment.t_end");
        cfg.dimension.n = int(intval(require(ex, "experiment", "n"), "experiment.n"));
        if (cfg.dimension.n < 1) throw ConfigError("experiment.n must be >= 1");
        if (ex.contains("variant")) {
            cfg.dimension.variant = strval(ex["variant"], "experiment.variant");
            if (cfg.dimension.variant != "full_gateaux" &&
                cfg.dimension.variant != "paper_operator")
                throw ConfigError("experiment.variant must be full_gateaux or paper_operator");
        }
        if (ex.contains("reorth_interval"))
            cfg.dimension.reorth_interval =
                int(intval(ex["reorth_interval"], "experiment.reorth_interval"));
        if (ex.contains("eigen_tangents"))
            cfg.dimension.eigen_tangents = boolval(ex["eigen_tangents"],
                                                   "experiment.eigen_tangents");
        if (ex.contains("trilinear_c"))
            cfg.dimension.trilinear_c = num(ex["trilinear_c"], "experiment.trilinear_c");
        if (ex.contains("c_f")) cfg.dimension.c_f = num(ex["c_f"], "experiment.c_f");
        if (ex.contains("n_max"))
            cfg.dimension.n_max = int(intval(ex["n_max"], "experiment.n_max"));
        if (ex.contains("grashof_window"))
            cfg.dimension.grashof_window = num(ex["grashof_window"], "experiment.grashof_window");
    } else if (type == "semicontinuity") {
        cfg.type = ExperimentType::semicontinuity;
        reject_unknown(ex, "experiment", {"type", "t", "eps_list", "tau_schedule", "universe",
                                          "n_members", "tol"});
        cfg.semicontinuity.t = num(require(ex, "experiment", "t"), "experiment.t");
        cfg.semicontinuity.eps_list = numlist(require(ex, "experiment", "eps_list"),
                                              "experiment.eps_list");
        for (std::size_t i = 1; i < cfg.semicontinuity.eps_list.size(); ++i)
            if (!(cfg.semicontinuity.eps_list[i] < cfg.semicontinuity.eps_list[i - 1]))
                throw ConfigError("experiment.eps_list must be strictly decreasing");
        cfg.semicontinuity.tau_schedule = parse_schedule(ex);
        cfg.semicontinuity.universe = UniverseInit::parse(require(ex, "experiment", "universe"),
                                                          "experiment.universe");
        cfg.semicontinuity.n_members = int(intval(require(ex, "experiment", "n_members"),
                                                  "experiment.n_members"));
        cfg.semicontinuity.tol = num(require(ex, "experiment", "tol"), "experiment.tol");
    } else
        throw ConfigError("experiment.type must be one of simulate, verify, pullback, "
                          "dimension, semicontinuity, compare_universes");

    const bool ensemble = cfg.type == ExperimentType::pullback ||
                          cfg.type == ExperimentType::semicontinuity ||
                          cfg.type == ExperimentType::compare_universes;
    if (ensemble && !cfg.has_seed)
        throw ConfigError("seed is required for ensemble experiments");

    // realize the universe spec early so its own invariants are validated
    try {
        if (cfg.type == ExperimentType::pullback) (void)cfg.pullback.universe.build();
        if (cfg.type == ExperimentType::semicontinuity) (void)cfg.semicontinuity.universe.build();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

}  // namespace pblb
