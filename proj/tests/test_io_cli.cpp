#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pblb/runner.hpp"

using namespace pblb;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("pblb_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream os(p, std::ios::binary);
    os << s;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(bool(is));
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PBLB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

const char* kSimulateConfig = R"({
  "model": {"nu": 1.0, "nu0": 1.0, "n": 8},
  "forcing": {"kind": "zero"},
  "integrator": {"dt": 0.01},
  "experiment": {
    "type": "simulate",
    "u0": {"type": "shear", "k": [1, 0, 0], "dir": 1, "amplitude": 0.5},
    "tau": 0.0, "t_end": 0.2, "sample_every": 2, "keep_snapshots": true
  }
})";

const char* kVerifyConfig = R"({
  "model": {"nu": 1.0, "nu0": 1.0, "n": 8},
  "forcing": {"kind": "steady",
              "g": {"type": "shear", "k": [1, 0, 0], "dir": 1, "amplitude": 0.3}},
  "integrator": {"dt": 0.01},
  "experiment": {
    "type": "verify",
    "u0": {"type": "shear", "k": [1, 0, 0], "dir": 1, "amplitude": 0.5},
    "tau": 0.0, "t_end": 1.5
  }
})";

const char* kPullbackConfig = R"({
  "model": {"nu": 1.0, "nu0": 1.0, "n": 8},
  "forcing": {"kind": "zero"},
  "integrator": {"dt": 0.01},
  "seed": 42,
  "experiment": {
    "type": "pullback",
    "t": 0.0, "tau_schedule": [-2.0, -4.0, -6.0],
    "universe": {"kind": "tempered", "mu": 1.0, "family": "constant", "scale": 0.5},
    "n_members": 3, "tol": 0.01
  }
})";

}  // namespace

TEST_CASE("snapshot: bitwise roundtrip") {
    WaveLattice lat(8);
    SpectralField u = random_divfree_field(lat, CounterRng(7), 2, 1.25);
    const fs::path dir = fresh_dir("snapshot");
    const std::string path = (dir / "u.pblb").string();
    save_snapshot(u, path);
    SpectralField v = load_snapshot(path);
    REQUIRE(v.lattice().n == lat.n);
    for (std::size_t i = 0; i < u.raw().size(); ++i) {
        CHECK(u.raw()[i].real() == v.raw()[i].real());
        CHECK(u.raw()[i].imag() == v.raw()[i].imag());
    }

    // a second save of the loaded field is byte-identical
    const std::string path2 = (dir / "v.pblb").string();
    save_snapshot(v, path2);
    CHECK(read_bytes(path) == read_bytes(path2));
}

TEST_CASE("snapshot: malformed files are rejected") {
    const fs::path dir = fresh_dir("snapshot_bad");

    write_text(dir / "magic.pblb", "NOPE\x01\x00\x00\x00\x08\x00\x00\x00");
    CHECK_THROWS_WITH_AS(load_snapshot((dir / "magic.pblb").string()),
                         doctest::Contains("bad magic"), std::runtime_error);

    WaveLattice lat(4);
    SpectralField u(lat);
    const std::string good = (dir / "good.pblb").string();
    save_snapshot(u, good);
    std::string bytes = read_bytes(good);

    std::string wrong_version = bytes;
    wrong_version[4] = 99;
    write_text(dir / "version.pblb", wrong_version);
    CHECK_THROWS_WITH_AS(load_snapshot((dir / "version.pblb").string()),
                         doctest::Contains("unsupported version"), std::runtime_error);

    write_text(dir / "trunc.pblb", bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_WITH_AS(load_snapshot((dir / "trunc.pblb").string()),
                         doctest::Contains("truncated"), std::runtime_error);

    write_text(dir / "trailing.pblb", bytes + "x");
    CHECK_THROWS_WITH_AS(load_snapshot((dir / "trailing.pblb").string()),
                         doctest::Contains("trailing"), std::runtime_error);

    CHECK_THROWS_AS(load_snapshot((dir / "missing.pblb").string()), std::runtime_error);
}

TEST_CASE("json writer: deterministic formatting") {
    CHECK(Json::format_double(0.1) == "0.10000000000000001");
    CHECK(Json::format_double(1.0) == "1");
    CHECK(Json::format_double(std::nan("")) == "\"nan\"");
    CHECK(Json::format_double(1.0 / 0.0) == "\"inf\"");
    CHECK(Json::format_double(-1.0 / 0.0) == "\"-inf\"");

    Json obj = Json::object();
    obj.set("b", Json::number(0.5));
    obj.set("a", Json::integer(3));
    obj.set("s", Json::str("x\"y\n"));
    obj.set("flag", Json::boolean(true));
    obj.set("none", Json::null());
    Json arr = Json::array(std::vector<double>{1.0, 2.5});
    obj.set("arr", std::move(arr));
    // insertion order preserved, strings escaped, doubles at 17 digits
    CHECK(obj.dump() ==
          "{\"b\":0.5,\"a\":3,\"s\":\"x\\\"y\\n\",\"flag\":true,\"none\":null,"
          "\"arr\":[1,2.5]}");

    obj.set("a", Json::integer(4));  // overwrite keeps position
    CHECK(obj.dump().find("\"b\":0.5,\"a\":4,") != std::string::npos);
}

TEST_CASE("config: valid experiments parse with expected fields") {
    RunConfig sim = parse_config(kSimulateConfig);
    CHECK(sim.type == ExperimentType::simulate);
    CHECK(sim.n == 8);
    CHECK(sim.simulate.sample_every == 2);
    CHECK(sim.simulate.keep_snapshots);
    CHECK(sim.config_hash == fnv1a_hash(kSimulateConfig));
    CHECK_FALSE(sim.has_seed);

    RunConfig pb = parse_config(kPullbackConfig);
    CHECK(pb.type == ExperimentType::pullback);
    CHECK(pb.has_seed);
    CHECK(pb.seed == 42);
    CHECK(pb.pullback.tau_schedule == std::vector<double>{-2.0, -4.0, -6.0});
    CHECK(pb.pullback.universe.kind == "tempered");

    RunConfig ver = parse_config(kVerifyConfig);
    CHECK(ver.type == ExperimentType::verify);
    CHECK(ver.simulate.mu == 0.0);  // defaults to nu*lambda_1 at run time
}

TEST_CASE("config: malformed inputs raise named errors") {
    auto expect_error = [](const std::string& text, const char* needle) {
        CHECK_THROWS_WITH_AS(parse_config(text), doctest::Contains(needle), ConfigError);
    };

    expect_error("not json", "invalid JSON");
    expect_error(R"({"model": {"nu": 1, "nu0": 1, "n": 8}, "forcing": {"kind": "zero"},
                     "integrator": {"dt": 0.01}, "experiment": {"type": "simulate",
                     "u0": {"type": "zero"}, "tau": 0, "t_end": 1}, "bogus": 1})",
                 "unknown key 'bogus'");
    expect_error(R"({"model": {"nu": -1, "nu0": 1, "n": 8}, "forcing": {"kind": "zero"},
                     "integrator": {"dt": 0.01}, "experiment": {"type": "simulate",
                     "u0": {"type": "zero"}, "tau": 0, "t_end": 1}})",
                 "model.nu must be > 0");
    expect_error(R"({"model": {"nu": 1, "nu0": 1, "n": 12}, "forcing": {"kind": "zero"},
                     "integrator": {"dt": 0.01}, "experiment": {"type": "simulate",
                     "u0": {"type": "zero"}, "tau": 0, "t_end": 1}})",
                 "power of two");
    expect_error(R"({"model": {"nu": 1, "nu0": 1, "n": 8}, "forcing": {"kind": "zero"},
                     "integrator": {"dt": 0.01}, "experiment": {"type": "simulate",
                     "u0": {"type": "zero", "extra": 1}, "tau": 0, "t_end": 1}})",
                 "unknown key 'extra'");
    expect_error(R"({"model": {"nu": 1, "nu0": 1, "n": 8}, "forcing": {"kind": "zero"},
                     "integrator": {"dt": 0.01}, "experiment": {"type": "pullback",
                     "t": 0, "tau_schedule": [-1, -2], "n_members": 2, "tol": 0.1,
                     "universe": {"kind": "fixed_bounded", "radius": 1}}})",
                 "seed is required");
    expect_error(R"({"model": {"nu": 1, "nu0": 1, "n": 8}, "forcing": {"kind": "zero"},
                     "integrator": {"dt": 0.01}, "seed": 1, "experiment":
                     {"type": "pullback", "t": 0, "tau_schedule": [-1, -1], "n_members": 2,
                     "tol": 0.1, "universe": {"kind": "fixed_bounded", "radius": 1}}})",
                 "strictly decreasing");
    // subexp growth rate must stay below mu/2; rejected at parse time
    expect_error(R"({"model": {"nu": 1, "nu0": 1, "n": 8}, "forcing": {"kind": "zero"},
                     "integrator": {"dt": 0.01}, "seed": 1, "experiment":
                     {"type": "pullback", "t": 0, "tau_schedule": [-1, -2], "n_members": 2,
                     "tol": 0.1, "universe": {"kind": "tempered", "mu": 1.0,
                     "family": "subexp", "scale": 1.0, "param": 0.7}}})",
                 "alpha < mu/2");
    expect_error(R"({"model": {"nu": 1, "nu0": 1, "n": 8}, "forcing": {"kind": "steady"},
                     "integrator": {"dt": 0.01}, "experiment": {"type": "simulate",
                     "u0": {"type": "zero"}, "tau": 0, "t_end": 1}})",
                 "missing required key 'g'");
}

TEST_CASE("runner: simulate writes manifest, trajectory and snapshots") {
    const fs::path out = fresh_dir("run_simulate");
    RunConfig cfg = parse_config(kSimulateConfig);
    CHECK(run_experiment(cfg, out.string()) == kExitOk);

    CHECK(fs::exists(out / "manifest.json"));
    CHECK(fs::exists(out / "trajectory.jsonl"));
    CHECK(fs::exists(out / "reports" / "simulate.json"));
    CHECK(fs::exists(out / "snapshots"));
    CHECK(fs::exists(out / "snapshots" / "sample_000000.pblb"));

    const std::string manifest = read_bytes(out / "manifest.json");
    CHECK(manifest.find("\"experiment\":\"simulate\"") != std::string::npos);
    CHECK(manifest.find("\"lattice_n\":8") != std::string::npos);

    // every trajectory line is a JSON object with the expected leading key
    std::ifstream is(out / "trajectory.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(is, line)) {
        CHECK(line.rfind("{\"t\":", 0) == 0);
        ++lines;
    }
    CHECK(lines == 11);  // t=0 plus 20 steps sampled every 2
}

TEST_CASE("runner: verify run passes on well-behaved data") {
    const fs::path out = fresh_dir("run_verify");
    RunConfig cfg = parse_config(kVerifyConfig);
    CHECK(run_experiment(cfg, out.string()) == kExitOk);
    const std::string rep = read_bytes(out / "reports" / "verdicts.json");
    CHECK(rep.find("\"all_hold\":true") != std::string::npos);
    CHECK(rep.find("\"energy_inequality\"") != std::string::npos);
    CHECK(rep.find("\"absorbing_radius\"") != std::string::npos);
}

TEST_CASE("runner: pullback report bytes are independent of thread count") {
    RunConfig cfg = parse_config(kPullbackConfig);
    const fs::path out1 = fresh_dir("pullback_t1");
    const fs::path out4 = fresh_dir("pullback_t4");
    CHECK(run_experiment(cfg, out1.string(), 1) == kExitOk);
    CHECK(run_experiment(cfg, out4.string(), 4) == kExitOk);

    CHECK(read_bytes(out1 / "reports" / "pullback.json") ==
          read_bytes(out4 / "reports" / "pullback.json"));
    CHECK(read_bytes(out1 / "manifest.json") == read_bytes(out4 / "manifest.json"));
    for (int i = 0; i < 3; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "member_%03d.pblb", i);
        CHECK(read_bytes(out1 / "snapshots" / name) == read_bytes(out4 / "snapshots" / name));
    }
    const std::string rep = read_bytes(out1 / "reports" / "pullback.json");
    CHECK(rep.find("\"converged\":true") != std::string::npos);
    CHECK(rep.find("\"nontriviality\"") != std::string::npos);
}

TEST_CASE("runner: unconverged pullback exits with verdict failure") {
    RunConfig cfg = parse_config(kPullbackConfig);
    cfg.pullback.tau_schedule = {-0.5, -1.0};
    cfg.pullback.tol = 1e-12;
    const fs::path out = fresh_dir("pullback_fail");
    CHECK(run_experiment(cfg, out.string()) == kExitVerdictFailure);
    CHECK(read_bytes(out / "reports" / "pullback.json").find("\"converged\":false") !=
          std::string::npos);
}

TEST_CASE("runner: describe mentions resolved parameters and costs") {
    RunConfig cfg = parse_config(kVerifyConfig);
    const std::string plan = describe_experiment(cfg);
    CHECK(plan.find("experiment: verify") != std::string::npos);
    CHECK(plan.find("mu0 = nu*lambda_1 = 1") != std::string::npos);
    CHECK(plan.find("estimated work: 150 step units") != std::string::npos);
}

TEST_CASE("cli: exit codes and artifact discipline") {
    const fs::path dir = fresh_dir("cli");
    const fs::path cfg_path = dir / "sim.json";
    write_text(cfg_path, kSimulateConfig);

    SUBCASE("validate succeeds without artifacts") {
        CHECK(run_cli("validate --config " + cfg_path.string()) == 0);
        CHECK_FALSE(fs::exists(dir / "out"));
    }

    SUBCASE("describe produces no artifacts") {
        CHECK(run_cli("describe --config " + cfg_path.string() + " --out " +
                      (dir / "out").string()) == 0);
        CHECK_FALSE(fs::exists(dir / "out"));
    }

    SUBCASE("run succeeds and writes into --out") {
        CHECK(run_cli("run --config " + cfg_path.string() + " --out " +
                      (dir / "out").string()) == 0);
        CHECK(fs::exists(dir / "out" / "manifest.json"));
    }

    SUBCASE("config errors exit 2") {
        write_text(dir / "bad.json", "{\"nonsense\": true}");
        CHECK(run_cli("run --config " + (dir / "bad.json").string()) == 2);
        CHECK(run_cli("run --config " + (dir / "missing.json").string()) == 2);
    }

    SUBCASE("numerical blow-up exits 3") {
        // huge amplitude, long explicit steps, tiny dissipation: overflows fast
        write_text(dir / "blowup.json", R"({
          "model": {"nu": 0.001, "nu0": 0.0, "n": 8},
          "forcing": {"kind": "zero"},
          "integrator": {"dt": 1.0},
          "experiment": {
            "type": "simulate",
            "u0": {"type": "random", "seed": 5, "kmax": 2, "h_norm": 50.0},
            "tau": 0.0, "t_end": 20.0
          }
        })");
        CHECK(run_cli("run --config " + (dir / "blowup.json").string() + " --out " +
                      (dir / "bout").string()) == 3);
    }
}
