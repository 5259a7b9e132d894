#include "opgame/config.hpp"
#include "opgame/experiment.hpp"
#include "opgame/plots.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace opgame;

std::vector<std::uint64_t> parse_seed_list(const std::string& raw) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(raw);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        seeds.push_back(std::stoull(cell));
    }
    return seeds;
}

std::vector<double> parse_sigma_list(const std::string& raw) {
    std::vector<double> sigmas;
    std::stringstream ss(raw);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        sigmas.push_back(std::stod(cell));
    }
    return sigmas;
}

void print_record(const MetricsRecord& r) {
    if (r.ok()) {
        std::cout << "sigma=" << r.sigma << " seed=" << r.seed
                  << " dist_defender=" << r.mean_dist_defender_goal
                  << " dist_adversary=" << r.mean_dist_adversary_goal
                  << " bimodality=" << r.final_bimodality << " J_a=" << r.J_a
                  << " J_d=" << r.J_d << "\n";
    } else {
        std::cout << "sigma=" << r.sigma << " seed=" << r.seed << " ERROR: " << r.error
                  << "\n";
    }
}

int cmd_run(const std::string& config_path, const std::string& seed_csv,
            const std::string& sigma_csv, const std::string& out_dir) {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!sigma_csv.empty()) {
        const auto sigmas = parse_sigma_list(sigma_csv);
        if (sigmas.size() != 1) {
            std::cerr << "run: --sigma takes a single value (use sweep for grids)\n";
            return 2;
        }
        cfg.kernel.sigma = sigmas.front();
    }
    std::vector<std::uint64_t> seeds = cfg.seeds;
    if (!seed_csv.empty()) seeds = parse_seed_list(seed_csv);

    bool any_error = false;
    for (std::uint64_t seed : seeds) {
        const ScenarioResult res = run_scenario(cfg, seed);
        print_record(res.metrics);
        any_error |= !res.metrics.ok();
    }
    return any_error ? 1 : 0;
}

int cmd_sweep(const std::string& config_path, const std::string& seed_csv,
              const std::string& sigma_csv, const std::string& out_dir, int jobs) {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!seed_csv.empty()) cfg.seeds = parse_seed_list(seed_csv);
    std::vector<double> sigmas = cfg.sigma_grid;
    if (!sigma_csv.empty()) sigmas = parse_sigma_list(sigma_csv);

    const auto rows = sweep_homophily(cfg, sigmas, jobs);
    bool any_error = false;
    for (const auto& r : rows) {
        print_record(r);
        any_error |= !r.ok();
    }
    std::cout << "sweep written to "
              << (std::filesystem::path(cfg.output_dir) / "sweep.csv").string() << "\n";
    return any_error ? 1 : 0;
}

int cmd_plot(const std::string& input, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path in(input);
    std::vector<std::string> written;
    if (fs::is_directory(in)) {
        const fs::path opinions = in / "opinions.csv";
        if (!fs::exists(opinions)) {
            std::cerr << "plot: no opinions.csv under " << in << "\n";
            return 2;
        }
        const auto snapshots = read_opinion_snapshots(opinions.string());
        written = emit_plots(snapshots, out_dir.empty() ? in.string() : out_dir);
    } else {
        const auto rows = read_sweep_csv(in.string());
        written = emit_plots(rows, out_dir.empty() ? in.parent_path().string() : out_dir);
    }
    for (const auto& f : written) std::cout << "wrote " << f << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Opinion-shaping game simulator: adversary vs defender on a social network"};
    app.require_subcommand(1);

    std::string config_path, seed_csv, sigma_csv, out_dir, plot_input;
    int jobs = 1;

    CLI::App* run = app.add_subcommand("run", "Run single scenarios (one per seed)");
    run->add_option("--config", config_path, "Scenario config file")->required();
    run->add_option("--seed", seed_csv, "Comma-separated seeds (default: config)");
    run->add_option("--sigma", sigma_csv, "Override kernel.sigma (single value)");
    run->add_option("--out", out_dir, "Output directory (default: config)");

    CLI::App* sweep = app.add_subcommand("sweep", "Sweep the homophily coefficient");
    sweep->add_option("--config", config_path, "Scenario config file")->required();
    sweep->add_option("--seed", seed_csv, "Comma-separated seeds (default: config)");
    sweep->add_option("--sigma", sigma_csv, "Comma-separated sigma grid (default: config)");
    sweep->add_option("--out", out_dir, "Output directory (default: config)");
    sweep->add_option("--jobs", jobs, "Parallel scenarios")->check(CLI::PositiveNumber);

    CLI::App* plot = app.add_subcommand("plot", "Render plots from persisted files");
    plot->add_option("input", plot_input, "Scenario directory or sweep.csv")->required();
    plot->add_option("--out", out_dir, "Output directory (default: next to input)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, seed_csv, sigma_csv, out_dir);
        if (sweep->parsed()) return cmd_sweep(config_path, seed_csv, sigma_csv, out_dir, jobs);
        if (plot->parsed()) return cmd_plot(plot_input, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
