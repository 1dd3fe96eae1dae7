#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ommap/io.hpp"
#include "ommap/parallel.hpp"
#include "ommap/runner.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Onsager-Machlup functionals, MAP estimators and Gamma-convergence probes"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    int threads = 0;
    app.add_option("--seed", seed, "Root seed (overrides the config)");
    app.add_option("--out", out, "Output directory (overrides the config)");
    app.add_option("--threads", threads, "Worker threads (default: OMMAP_THREADS or 1)")->check(CLI::NonNegativeNumber);

    std::string run_path, validate_path, figure_id;
    CLI::App* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
    run->add_option("config", run_path, "Config file")->required();
    CLI::App* validate = app.add_subcommand("validate", "Check a config against the schema without running it");
    validate->add_option("config", validate_path, "Config file")->required();
    CLI::App* reproduce = app.add_subcommand("reproduce", "Write plot-ready CSV grids for a figure");
    reproduce->add_option("figure", figure_id, "fig1a, fig1b, figB1 or figB3")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        ommap::set_default_threads(ommap::resolve_threads(threads));
        if (*run) {
            ommap::RunOptions opts;
            opts.seed = seed;
            if (out) opts.out = *out;
            opts.threads = threads;
            const ommap::RunSummary s = ommap::run_config(ommap::read_json_file(run_path), opts);
            std::cout << s.kind << ": wrote";
            for (const std::string& f : s.files) std::cout << ' ' << (s.out_dir / f).string();
            std::cout << '\n';
        } else if (*validate) {
            ommap::validate_config(ommap::read_json_file(validate_path));
            std::cout << validate_path << ": ok\n";
        } else {
            const std::filesystem::path dir = out.value_or("figures");
            for (const std::string& f : ommap::reproduce_figure(figure_id, dir)) std::cout << (dir / f).string() << '\n';
        }
    } catch (const ommap::ConfigError& e) {
        std::cerr << "config error at " << e.what() << '\n';
        return kExitInput;
    } catch (const ommap::InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ommap::ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ommap::RegimeError& e) {
        std::cerr << "regime error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ommap::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
