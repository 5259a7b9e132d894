#ifndef OPGAME_EXPERIMENT_HPP
#define OPGAME_EXPERIMENT_HPP

#include "opgame/config.hpp"
#include "opgame/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace opgame {

// One row of the consolidated sweep output. An empty `error` means the
// scenario completed; otherwise the metric fields are NaN.
struct MetricsRecord {
    double sigma = 0.0;
    std::uint64_t seed = 0;
    double mean_dist_defender_goal = 0.0;
    double mean_dist_adversary_goal = 0.0;
    double final_bimodality = 0.0;
    double J_a = 0.0;
    double J_d = 0.0;
    std::string error;

    bool ok() const { return error.empty(); }
};

// Mean opinion distance to the goal: each individual's own anchor
// (initial mode) or a shared target point (point mode).
double mean_distance_to_goal(const Population& p, GoalMode mode,
                             const std::optional<Vec>& point = std::nullopt);

// Adversary-goal distance restricted to the opinion dimensions the
// adversary actually prices (nonzero diagonal of its per-dimension state
// cost); a zero-cost dimension with a free goal coordinate would
// otherwise pollute the metric.
double masked_distance_to_point(const Population& p, const Vec& point, const Mat& q_dim);

// Bimodality coefficient of the opinions projected on their first
// principal axis.
double final_bimodality(const Population& p);

// Initial opinions per the scenario's network section (synthetic mixture
// or edge list + embedding); deterministic per seed.
Population build_population(const ExperimentConfig& cfg, std::uint64_t seed);

struct ScenarioResult {
    Trace trace;
    MetricsRecord metrics;
};

// Run one scenario: build the population, run the receding-horizon game,
// compute metrics, and persist the trace, metrics, and the exact config
// under <output_dir>/run_sigma<sigma>_seed<seed>/.
ScenarioResult run_scenario(const ExperimentConfig& cfg, std::uint64_t seed);

// Run every (sigma, seed) pair, overriding kernel.sigma per run, with up
// to `jobs` scenarios in flight. Failures land in per-row error flags
// and the sweep continues. Rows come back sorted by (sigma, seed) and
// are written to <output_dir>/sweep.csv.
std::vector<MetricsRecord> sweep_homophily(const ExperimentConfig& cfg,
                                           const std::vector<double>& sigmas, int jobs = 1);

inline const char* kSweepCsvHeader =
    "sigma,seed,mean_dist_defender_goal,mean_dist_adversary_goal,final_bimodality,J_a,J_d,"
    "error";

void write_sweep_csv(const std::vector<MetricsRecord>& rows, const std::string& path);
std::vector<MetricsRecord> read_sweep_csv(const std::string& path);

// Trace persistence (see README for the file formats).
void write_trace_files(const Trace& tr, int dim, const std::string& dir, int max_level);
std::vector<Mat> read_opinion_snapshots(const std::string& path);

} // namespace opgame

#endif
