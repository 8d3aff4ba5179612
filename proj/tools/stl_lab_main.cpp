// stl-lab: self-consuming training loop laboratory.
//
// Subcommands:
//   run         --config FILE [--seed S] [--out DIR] [--svg]
//   summarize   --in FILE --group keys [--slope n|generation]
//   bounds      --config FILE
//   lambda-star --config FILE
//   check       [acceptance suite; exit code 4 on failure]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime/numeric error,
// 4 acceptance-check failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stllab/acceptance.hpp"
#include "stllab/config.hpp"
#include "stllab/csv.hpp"
#include "stllab/experiments.hpp"
#include "stllab/svg.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw stllab::ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

int run_command(const std::string& config_path, std::uint64_t seed_override, bool has_seed,
                const std::string& out_dir, bool svg) {
    auto cfg = stllab::parse_config(slurp(config_path));
    if (has_seed) cfg.seed = seed_override;

    const auto rows = stllab::run_experiment(cfg);
    const std::string csv = stllab::to_csv(rows);

    std::size_t nan_count = 0;
    for (const auto& r : rows)
        if (!std::isfinite(r.value)) ++nan_count;

    if (out_dir.empty()) {
        std::cout << csv;
        if (nan_count > 0) std::cerr << "warning: " << nan_count << " non-finite values\n";
        return 0;
    }
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_file(dir / (cfg.experiment + ".csv"), csv);
    write_file(dir / (cfg.experiment + "_echo.cfg"), stllab::config_echo(cfg));
    if (svg) write_file(dir / (cfg.experiment + ".svg"), stllab::svg_line_chart(rows));
    std::cout << "wrote " << (dir / (cfg.experiment + ".csv")).string() << " (" << rows.size()
              << " rows)";
    if (nan_count > 0) std::cout << ", " << nan_count << " non-finite values";
    std::cout << "\n";
    return 0;
}

int summarize_command(const std::string& in_path, const std::string& group,
                      const std::string& slope) {
    std::ifstream in(in_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + in_path);
    const auto rows = stllab::read_csv(in);
    std::vector<std::string> keys;
    std::stringstream ss(group);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) keys.push_back(tok);
    if (keys.empty()) throw std::runtime_error("--group needs at least one key");
    std::cout << stllab::summarize(rows, keys, slope);
    return 0;
}

int evaluator_command(const std::string& config_path, const std::string& expected_experiment) {
    auto cfg = stllab::parse_config(slurp(config_path));
    if (cfg.experiment != expected_experiment)
        throw stllab::ConfigError("config is for experiment '" + cfg.experiment + "', expected '" +
                                  expected_experiment + "'");
    const auto rows = stllab::run_experiment(cfg);
    std::cout << stllab::to_csv(rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-consuming training loop laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, in_path, group, slope;
    std::uint64_t seed = 0;
    bool svg = false;

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("--config", config_path, "config file (key=value or JSON)")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override the master seed");
    run->add_option("--out", out_dir, "output directory (default: CSV to stdout)");
    run->add_flag("--svg", svg, "also emit a simple SVG line chart");

    auto* summ = app.add_subcommand("summarize", "aggregate a result CSV");
    summ->add_option("--in", in_path, "input CSV")->required();
    summ->add_option("--group", group, "comma-separated group keys")->required();
    summ->add_option("--slope", slope, "slope fit axis: n or generation");

    auto* bounds = app.add_subcommand("bounds", "evaluate theorem right-hand sides");
    bounds->add_option("--config", config_path, "config file with experiment = bounds")->required();

    auto* lstar = app.add_subcommand("lambda-star", "solve the optimal augmentation coefficient");
    lstar->add_option("--config", config_path, "config file with experiment = lambda-star")
        ->required();

    auto* check = app.add_subcommand("check", "run the acceptance suite (exit 4 on failure)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (run->parsed())
            return run_command(config_path, seed, seed_opt->count() > 0, out_dir, svg);
        if (summ->parsed()) return summarize_command(in_path, group, slope);
        if (bounds->parsed()) return evaluator_command(config_path, "bounds");
        if (lstar->parsed()) return evaluator_command(config_path, "lambda-star");
        if (check->parsed()) return stllab::acceptance::run_main(std::cout) == 0 ? 0 : 4;
    } catch (const stllab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
