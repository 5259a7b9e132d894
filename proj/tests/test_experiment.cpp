#include "opgame/experiment.hpp"

#include "opgame/csv.hpp"
#include "opgame/errors.hpp"
#include "opgame/plots.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace opgame;
namespace fs = std::filesystem;

namespace {

Population make_population(const Mat& x) {
    Population p;
    p.opinions = x;
    p.initial_opinions = x;
    return p;
}

// Small three-blob scenario used across the runner tests.
ExperimentConfig small_config(const std::string& out_dir) {
    ExperimentConfig cfg;
    SyntheticNetworkSpec syn;
    syn.n = 40;
    MixtureComponent a{(Vec(2) << -1.0, 0.0).finished(), 0.04 * Mat::Identity(2, 2), 0.5};
    MixtureComponent b{(Vec(2) << 1.0, 0.5).finished(), 0.04 * Mat::Identity(2, 2), 0.5};
    syn.components = {a, b};
    cfg.network = syn;
    cfg.dim = 2;

    cfg.cost_adversary.q_dim = (Mat(2, 2) << 3.0, 0.0, 0.0, 0.0).finished();
    cfg.cost_adversary.r = 20.0 * Mat::Identity(2, 2);
    cfg.cost_adversary.goal_mode = GoalMode::fixed_point;
    cfg.cost_adversary.goal_point = (Vec(2) << -1.0, 0.0).finished();
    cfg.cost_defender.q_dim = Mat::Identity(2, 2);
    cfg.cost_defender.r = 80.0 * Mat::Identity(2, 2);
    cfg.cost_defender.goal_mode = GoalMode::initial_centers;

    cfg.solver.horizon = 2;
    cfg.solver.max_level = 2;
    cfg.solver.total_steps = 3;
    cfg.clustering.m0 = 3;
    cfg.seeds = {1, 2};
    cfg.sigma_grid = {1.0};
    cfg.output_dir = out_dir;
    return cfg;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("defender metric is zero when nothing moved") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    Mat x(10, 2);
    for (int i = 0; i < 10; ++i) {
        x(i, 0) = g(rng);
        x(i, 1) = g(rng);
    }
    const Population p = make_population(x);
    CHECK(mean_distance_to_goal(p, GoalMode::initial_centers) == 0.0);
}

TEST_CASE("adversary metric is zero at full capture") {
    Mat x = Mat::Zero(6, 2);
    x.col(0).setConstant(-1.0);
    Population p = make_population(x);
    const Vec goal = (Vec(2) << -1.0, 0.0).finished();
    CHECK(mean_distance_to_goal(p, GoalMode::fixed_point, goal) == 0.0);
}

TEST_CASE("point-mode distance matches the hand average") {
    Mat x(2, 2);
    x << 0.0, 0.0, 2.0, 0.0;
    const Population p = make_population(x);
    const Vec goal = (Vec(2) << 1.0, 0.0).finished();
    CHECK(mean_distance_to_goal(p, GoalMode::fixed_point, goal) == doctest::Approx(1.0));
}

TEST_CASE("masked distance ignores zero-cost dimensions") {
    Mat x(2, 2);
    x << -1.0, 5.0, -1.0, -7.0;  // far away only in dimension 1
    const Population p = make_population(x);
    const Vec goal = (Vec(2) << -1.0, 0.0).finished();
    const Mat q_masked = (Mat(2, 2) << 3.0, 0.0, 0.0, 0.0).finished();
    CHECK(masked_distance_to_point(p, goal, q_masked) == 0.0);
    const Mat q_full = 3.0 * Mat::Identity(2, 2);
    CHECK(masked_distance_to_point(p, goal, q_full) == doctest::Approx(6.0));
}

TEST_CASE("metric error paths") {
    Mat flat = Mat::Zero(6, 2);
    CHECK_THROWS_AS(final_bimodality(make_population(flat)), UndefinedStatisticError);
    Mat x(2, 2);
    x.setRandom();
    CHECK_THROWS_AS(mean_distance_to_goal(make_population(x), GoalMode::fixed_point),
                    std::invalid_argument);
}

TEST_CASE("final bimodality calibrates on normal and two-point samples") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    Mat normal(10000, 2);
    for (int i = 0; i < normal.rows(); ++i) {
        normal(i, 0) = 2.0 * g(rng);
        normal(i, 1) = 0.5 * g(rng);
    }
    CHECK(std::abs(final_bimodality(make_population(normal)) - 1.0 / 3.0) < 0.05);

    Mat two_point(8, 2);
    for (int i = 0; i < 8; ++i) {
        two_point(i, 0) = i % 2 == 0 ? 1.0 : -1.0;
        two_point(i, 1) = 0.0;
    }
    CHECK(final_bimodality(make_population(two_point)) == doctest::Approx(1.0).epsilon(1e-9));

    // Affine rescaling along the same axis leaves the coefficient alone.
    Mat scaled = normal;
    scaled.col(0) = 3.0 * normal.col(0).array() - 4.0;
    scaled.col(1) = 3.0 * normal.col(1).array();
    CHECK(final_bimodality(make_population(scaled)) ==
          doctest::Approx(final_bimodality(make_population(normal))).epsilon(1e-9));
}

TEST_CASE("config text parses, serializes, and round-trips") {
    const std::string text = R"(
# reference-style scenario
network.type = synthetic
network.n = 120
network.components = 2
network.component.0.mean = -1.0, 0.5
network.component.0.cov = 0.09
network.component.0.fraction = 0.5
network.component.1.mean = 1.0, -0.5
network.component.1.cov = 0.04, 0.09
network.component.1.fraction = 0.5
kernel.sigma = 0.32
dynamics.alpha = 0.5
dynamics.eta = 1
cost.adversary.q = 3
cost.adversary.r = 20
cost.adversary.goal = 0, -1.5
cost.defender.q = 1
cost.defender.r = 80
cost.defender.goal = initial
solver.horizon = 5
solver.max_level = 10
solver.steps = 12
solver.u0_adversary = 0, -1
clustering.m0 = 8
seeds = 1, 2, 3
sigma_grid = 0.1, 1, 10
output_dir = out_test
)";
    const ExperimentConfig cfg = parse_config_text(text);
    CHECK(cfg.dim == 2);
    CHECK(std::get<SyntheticNetworkSpec>(cfg.network).n == 120);
    CHECK(cfg.kernel.sigma == 0.32);
    CHECK(cfg.dynamics.alpha == 0.5);
    CHECK(cfg.dynamics.eta == 1.0);
    CHECK(cfg.dynamics.lambda == 0.7);  // default
    CHECK(cfg.cost_adversary.q_dim(0, 0) == 3.0);
    CHECK(cfg.cost_adversary.goal_point(1) == -1.5);
    CHECK(cfg.cost_defender.goal_mode == GoalMode::initial_centers);
    CHECK(cfg.solver.max_level == 10);
    REQUIRE(cfg.solver.initial_message_adversary.has_value());
    CHECK((*cfg.solver.initial_message_adversary)(1) == -1.0);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(cfg.sigma_grid == std::vector<double>{0.1, 1.0, 10.0});

    const ExperimentConfig again = parse_config_text(serialize_config(cfg));
    CHECK(serialize_config(again) == serialize_config(cfg));
}

TEST_CASE("config rejects unknown keys and bad values") {
    CHECK_THROWS_AS(parse_config_text("network.typo = synthetic\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("dynamics.alpha = 1.5\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("network.type = mesh\n"), std::invalid_argument);
}

TEST_CASE("message-free scenario keeps the defender metric at zero") {
    const fs::path dir = fresh_dir("opgame_exp_eta0");
    ExperimentConfig cfg = small_config(dir.string());
    cfg.dynamics.eta = 0.0;
    const ScenarioResult res = run_scenario(cfg, 1);
    CHECK(res.metrics.ok());
    CHECK(res.metrics.mean_dist_defender_goal < 1e-12);
    fs::remove_all(dir);
}

TEST_CASE("scenario runs are deterministic and persist their files") {
    const fs::path dir = fresh_dir("opgame_exp_det");
    const ExperimentConfig cfg = small_config(dir.string());
    const ScenarioResult r1 = run_scenario(cfg, 2);
    const ScenarioResult r2 = run_scenario(cfg, 2);
    CHECK(r1.metrics.mean_dist_defender_goal == r2.metrics.mean_dist_defender_goal);
    CHECK(r1.metrics.mean_dist_adversary_goal == r2.metrics.mean_dist_adversary_goal);
    CHECK(r1.metrics.final_bimodality == r2.metrics.final_bimodality);
    CHECK(r1.metrics.J_a == r2.metrics.J_a);
    CHECK(r1.metrics.J_d == r2.metrics.J_d);

    const fs::path run_dir = dir / "run_sigma1_seed2";
    for (const char* name :
         {"config.cfg", "messages.csv", "opinions.csv", "clusters.csv", "summary.csv",
          "population.csv", "metrics.csv"}) {
        CHECK(fs::exists(run_dir / name));
    }
    fs::remove_all(dir);
}

TEST_CASE("metrics recomputed from the persisted trace match exactly") {
    const fs::path dir = fresh_dir("opgame_exp_consist");
    const ExperimentConfig cfg = small_config(dir.string());
    const ScenarioResult res = run_scenario(cfg, 1);
    REQUIRE(res.metrics.ok());

    const fs::path run_dir = dir / "run_sigma1_seed1";
    const auto snapshots = read_opinion_snapshots((run_dir / "opinions.csv").string());
    REQUIRE(snapshots.size() == static_cast<size_t>(cfg.solver.total_steps) + 1);

    Population final_pop;
    final_pop.initial_opinions = snapshots.front();
    final_pop.opinions = snapshots.back();
    CHECK(mean_distance_to_goal(final_pop, GoalMode::initial_centers) ==
          res.metrics.mean_dist_defender_goal);
    CHECK(masked_distance_to_point(final_pop, cfg.cost_adversary.goal_point,
                                   cfg.cost_adversary.q_dim) ==
          res.metrics.mean_dist_adversary_goal);
    CHECK(final_bimodality(final_pop) == res.metrics.final_bimodality);

    const auto rows = read_sweep_csv((run_dir / "metrics.csv").string());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].J_a == res.metrics.J_a);
    CHECK(rows[0].J_d == res.metrics.J_d);
    fs::remove_all(dir);
}

TEST_CASE("singleton sweep equals the single scenario") {
    const fs::path dir = fresh_dir("opgame_exp_single");
    ExperimentConfig cfg = small_config(dir.string());
    cfg.seeds = {1};
    const auto rows = sweep_homophily(cfg, {1.0}, 1);
    REQUIRE(rows.size() == 1);
    const ScenarioResult res = run_scenario(cfg, 1);
    CHECK(rows[0].mean_dist_defender_goal == res.metrics.mean_dist_defender_goal);
    CHECK(rows[0].J_d == res.metrics.J_d);
    fs::remove_all(dir);
}

TEST_CASE("sweep output is byte-identical across reruns and job counts") {
    const fs::path dir1 = fresh_dir("opgame_exp_sweep1");
    const fs::path dir2 = fresh_dir("opgame_exp_sweep2");
    ExperimentConfig cfg = small_config(dir1.string());
    sweep_homophily(cfg, {0.5, 1.0}, 1);
    cfg.output_dir = dir2.string();
    sweep_homophily(cfg, {0.5, 1.0}, 3);
    CHECK(slurp(dir1 / "sweep.csv") == slurp(dir2 / "sweep.csv"));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("duplicate sigmas duplicate rows without deduplication") {
    const fs::path dir = fresh_dir("opgame_exp_dup");
    ExperimentConfig cfg = small_config(dir.string());
    cfg.seeds = {1};
    const auto rows = sweep_homophily(cfg, {1.0, 1.0}, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].sigma == rows[1].sigma);
    CHECK(rows[0].J_d == rows[1].J_d);
    fs::remove_all(dir);
}

TEST_CASE("a failing scenario is flagged and the sweep continues") {
    const fs::path dir = fresh_dir("opgame_exp_fail");
    ExperimentConfig cfg = small_config(dir.string());
    cfg.seeds = {1};
    cfg.clustering.m0 = 1;  // reduction to one cluster cannot form a quotient graph
    const auto rows = sweep_homophily(cfg, {0.5, 1.0}, 1);
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0].ok());
    CHECK_FALSE(rows[1].ok());
    CHECK(std::isnan(rows[0].J_d));

    // Round-trips through the CSV with the error column intact.
    const auto parsed = read_sweep_csv((dir / "sweep.csv").string());
    REQUIRE(parsed.size() == 2);
    CHECK_FALSE(parsed[0].ok());
    fs::remove_all(dir);
}

TEST_CASE("scenario plots: one scatter plus one panel per dimension") {
    const fs::path dir = fresh_dir("opgame_exp_plots");
    ExperimentConfig cfg = small_config(dir.string());
    cfg.seeds = {1};
    const ScenarioResult res = run_scenario(cfg, 1);
    const auto files = emit_plots(res.trace, (dir / "plots").string());
    CHECK(files.size() == 3);  // scatter + 2 dimensions
    for (const auto& f : files) CHECK(fs::exists(f));
    fs::remove_all(dir);
}

TEST_CASE("sweep plots: one file per metric") {
    const fs::path dir = fresh_dir("opgame_exp_mplots");
    std::vector<MetricsRecord> table;
    for (double sigma : {0.1, 1.0, 10.0}) {
        for (std::uint64_t seed : {1, 2}) {
            MetricsRecord r;
            r.sigma = sigma;
            r.seed = seed;
            r.mean_dist_defender_goal = 0.1 * sigma + 0.01 * seed;
            r.mean_dist_adversary_goal = 1.0 / (1.0 + sigma);
            r.final_bimodality = 0.4 + 0.02 * seed;
            table.push_back(r);
        }
    }
    const auto files = emit_plots(table, dir.string());
    CHECK(files.size() == 3);
    for (const auto& f : files) CHECK(fs::exists(f));

    const std::vector<MetricsRecord> empty;
    CHECK_THROWS_AS(emit_plots(empty, dir.string()), std::invalid_argument);
    fs::remove_all(dir);
}
