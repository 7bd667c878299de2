// pblb — pseudo-spectral laboratory for the 3D Navier-Stokes system with
// nonlinear viscosity on the periodic torus.
//
// Subcommands:
//   run       execute the configured experiment and write artifacts
//   describe  print the resolved experiment plan without computing anything
//   validate  parse and validate a config file, print its hash
//
// Exit codes: 0 success, 1 verdict failure, 2 config error, 3 blow-up.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "pblb/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"pblb: pseudo-spectral Navier-Stokes laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int threads = 0;
    long long seed_override = -1;
    bool has_seed_override = false;

    auto add_common = [&](CLI::App* sub, bool with_run_opts) {
        sub->add_option("-c,--config", config_path, "path to the JSON config file")
            ->required();
        if (with_run_opts) {
            sub->add_option("-o,--out", out_dir,
                            "output directory (default: config 'output' field)");
            sub->add_option("-t,--threads", threads,
                            "worker threads (0 = PBLB_THREADS env or hardware)");
            sub->add_option("-s,--seed", seed_override, "override the config seed")
                ->check(CLI::NonNegativeNumber)
                ->each([&](const std::string&) { has_seed_override = true; });
        }
    };

    CLI::App* run = app.add_subcommand("run", "execute the experiment");
    add_common(run, true);
    CLI::App* describe = app.add_subcommand("describe", "print the resolved plan (dry run)");
    add_common(describe, true);
    CLI::App* validate = app.add_subcommand("validate", "check the config and print its hash");
    add_common(validate, false);

    CLI11_PARSE(app, argc, argv);

    try {
        pblb::RunConfig cfg = pblb::load_config(config_path);
        if (has_seed_override) {
            cfg.seed = static_cast<std::uint64_t>(seed_override);
            cfg.has_seed = true;
        }

        if (validate->parsed()) {
            std::printf("ok: %s experiment, config hash %s\n", cfg.experiment_name(),
                        pblb::rundetail::hex64(cfg.config_hash).c_str());
            return pblb::kExitOk;
        }
        if (describe->parsed()) {
            std::fputs(pblb::describe_experiment(cfg).c_str(), stdout);
            return pblb::kExitOk;
        }

        const std::string out = out_dir.empty() ? cfg.out_dir : out_dir;
        const int code = pblb::run_experiment(cfg, out, threads);
        std::printf("%s: %s (artifacts in %s)\n", cfg.experiment_name(),
                    code == pblb::kExitOk ? "ok" : "verdict failure", out.c_str());
        return code;
    } catch (const pblb::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return pblb::kExitConfigError;
    } catch (const pblb::BlowupError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return pblb::kExitBlowup;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return pblb::kExitConfigError;
    }
}
