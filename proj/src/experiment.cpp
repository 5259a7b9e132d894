#include "opgame/experiment.hpp"

#include "opgame/csv.hpp"
#include "opgame/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace opgame {

double mean_distance_to_goal(const Population& p, GoalMode mode,
                             const std::optional<Vec>& point) {
    p.validate();
    double total = 0.0;
    if (mode == GoalMode::initial_centers) {
        for (int i = 0; i < p.n(); ++i) {
            total += (p.opinions.row(i) - p.initial_opinions.row(i)).norm();
        }
    } else {
        if (!point || point->size() != p.dim()) {
            throw std::invalid_argument("mean_distance_to_goal: point mode needs a goal point");
        }
        for (int i = 0; i < p.n(); ++i) {
            total += (p.opinions.row(i).transpose() - *point).norm();
        }
    }
    return total / p.n();
}

double masked_distance_to_point(const Population& p, const Vec& point, const Mat& q_dim) {
    p.validate();
    if (point.size() != p.dim() || q_dim.rows() != p.dim()) {
        throw std::invalid_argument("masked_distance_to_point: dimension mismatch");
    }
    std::vector<int> dims;
    for (int j = 0; j < p.dim(); ++j) {
        if (q_dim(j, j) != 0.0) dims.push_back(j);
    }
    if (dims.empty()) {
        for (int j = 0; j < p.dim(); ++j) dims.push_back(j);
    }
    double total = 0.0;
    for (int i = 0; i < p.n(); ++i) {
        double d2 = 0.0;
        for (int j : dims) {
            const double diff = p.opinions(i, j) - point(j);
            d2 += diff * diff;
        }
        total += std::sqrt(d2);
    }
    return total / p.n();
}

double final_bimodality(const Population& p) {
    p.validate();
    if (p.n() < 4) {
        throw UndefinedStatisticError("final_bimodality: need at least 4 individuals");
    }
    const ClusterStats st = compute_cluster_stats(p.opinions);
    const Vec proj = (p.opinions.rowwise() - st.mean.transpose()) * st.principal_axis;
    return bimodality_coefficient(proj);
}

Population build_population(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (std::holds_alternative<SyntheticNetworkSpec>(cfg.network)) {
        const auto& syn = std::get<SyntheticNetworkSpec>(cfg.network);
        return generate_synthetic_population(syn.n, syn.components, seed);
    }
    const auto& el = std::get<EdgeListNetworkSpec>(cfg.network);
    const EdgeListGraph g = load_edge_list(el.path);
    return force_directed_embedding(g, el.embed_iterations, seed);
}

namespace {

std::string scenario_dir_name(double sigma, std::uint64_t seed) {
    return "run_sigma" + format_double(sigma) + "_seed" + std::to_string(seed);
}

void write_clusters_csv(const Trace& tr, int dim, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "t,cluster_id,size";
    for (int j = 0; j < dim; ++j) out << ",mean_" << j;
    out << '\n';
    for (int t = 0; t < static_cast<int>(tr.labels.size()); ++t) {
        const auto& labels = tr.labels[t];
        const int m = tr.cluster_counts[t];
        const Mat& snapshot = tr.opinions[t + 1];
        Mat centers = Mat::Zero(m, dim);
        std::vector<int> sizes(m, 0);
        for (size_t i = 0; i < labels.size(); ++i) {
            centers.row(labels[i]) += snapshot.row(static_cast<int>(i));
            sizes[labels[i]] += 1;
        }
        for (int c = 0; c < m; ++c) {
            out << (t + 1) << ',' << c << ',' << sizes[c];
            for (int j = 0; j < dim; ++j) {
                out << ',' << format_double(centers(c, j) / sizes[c]);
            }
            out << '\n';
        }
    }
}

MetricsRecord failed_record(double sigma, std::uint64_t seed, const std::string& why) {
    MetricsRecord rec;
    rec.sigma = sigma;
    rec.seed = seed;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.mean_dist_defender_goal = nan;
    rec.mean_dist_adversary_goal = nan;
    rec.final_bimodality = nan;
    rec.J_a = nan;
    rec.J_d = nan;
    std::string cleaned = why;
    std::replace(cleaned.begin(), cleaned.end(), ',', ';');
    std::replace(cleaned.begin(), cleaned.end(), '\n', ' ');
    rec.error = cleaned;
    return rec;
}

} // namespace

void write_trace_files(const Trace& tr, int dim, const std::string& dir, int max_level) {
    std::filesystem::create_directories(dir);
    const auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };

    {
        std::ofstream out(path("messages.csv"));
        if (!out) throw std::runtime_error("cannot write messages.csv under '" + dir + "'");
        out << "t,player";
        for (int j = 0; j < dim; ++j) out << ",u_" << j;
        out << '\n';
        for (int t = 0; t < tr.steps(); ++t) {
            out << (t + 1) << ",adversary";
            for (int j = 0; j < dim; ++j) out << ',' << format_double(tr.messages_a(t, j));
            out << '\n';
            out << (t + 1) << ",defender";
            for (int j = 0; j < dim; ++j) out << ',' << format_double(tr.messages_d(t, j));
            out << '\n';
        }
    }
    {
        std::ofstream out(path("opinions.csv"));
        if (!out) throw std::runtime_error("cannot write opinions.csv under '" + dir + "'");
        out << "t,id";
        for (int j = 0; j < dim; ++j) out << ",x_" << j;
        out << '\n';
        for (size_t t = 0; t < tr.opinions.size(); ++t) {
            const Mat& snap = tr.opinions[t];
            for (int i = 0; i < snap.rows(); ++i) {
                out << t << ',' << i;
                for (int j = 0; j < dim; ++j) out << ',' << format_double(snap(i, j));
                out << '\n';
            }
        }
    }
    write_clusters_csv(tr, dim, path("clusters.csv"));
    {
        std::ofstream out(path("summary.csv"));
        if (!out) throw std::runtime_error("cannot write summary.csv under '" + dir + "'");
        out << "J_a,J_d,T,H,level\n";
        out << format_double(tr.J_a) << ',' << format_double(tr.J_d) << ',' << tr.steps()
            << ',' << max_level << '\n';
    }
}

std::vector<Mat> read_opinion_snapshots(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_opinion_snapshots: cannot open '" + path + "'");
    std::string header;
    std::getline(in, header);
    const int cols = static_cast<int>(std::count(header.begin(), header.end(), ',')) + 1;
    const int dim = cols - 2;
    if (dim < 1) throw ParseError(1, "read_opinion_snapshots: bad header");

    std::vector<std::vector<std::vector<double>>> frames;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ls, cell, ',')) vals.push_back(parse_double(cell));
        if (static_cast<int>(vals.size()) != cols) {
            throw ParseError(lineno, "read_opinion_snapshots: wrong column count");
        }
        const size_t t = static_cast<size_t>(vals[0]);
        if (frames.size() <= t) frames.resize(t + 1);
        frames[t].push_back({vals.begin() + 2, vals.end()});
    }

    std::vector<Mat> out;
    out.reserve(frames.size());
    for (const auto& frame : frames) {
        Mat snap(static_cast<int>(frame.size()), dim);
        for (size_t i = 0; i < frame.size(); ++i) {
            for (int j = 0; j < dim; ++j) snap(static_cast<int>(i), j) = frame[i][j];
        }
        out.push_back(std::move(snap));
    }
    return out;
}

ScenarioResult run_scenario(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ScenarioResult res;
    Population p;
    try {
        p = build_population(cfg, seed);
        res.trace = receding_horizon_run(p, cfg.cost_adversary, cfg.cost_defender,
                                         cfg.solver, cfg.dynamics, cfg.kernel,
                                         cfg.clustering);
    } catch (const std::exception& e) {
        throw std::runtime_error("scenario sigma=" + format_double(cfg.kernel.sigma) +
                                 " seed=" + std::to_string(seed) + ": " + e.what());
    }

    MetricsRecord& rec = res.metrics;
    rec.sigma = cfg.kernel.sigma;
    rec.seed = seed;
    if (!res.trace.valid) {
        rec = failed_record(cfg.kernel.sigma, seed, res.trace.error);
    } else {
        Population final_pop = p;
        final_pop.opinions = res.trace.opinions.back();
        rec.mean_dist_defender_goal =
            mean_distance_to_goal(final_pop, GoalMode::initial_centers);
        const Vec adversary_goal = cfg.cost_adversary.goal_mode == GoalMode::fixed_point
                                       ? cfg.cost_adversary.goal_point
                                       : Vec::Zero(cfg.dim);
        rec.mean_dist_adversary_goal =
            masked_distance_to_point(final_pop, adversary_goal, cfg.cost_adversary.q_dim);
        rec.final_bimodality = final_bimodality(final_pop);
        rec.J_a = res.trace.J_a;
        rec.J_d = res.trace.J_d;
    }

    const auto dir = std::filesystem::path(cfg.output_dir) / scenario_dir_name(cfg.kernel.sigma, seed);
    std::filesystem::create_directories(dir);
    save_config(cfg, (dir / "config.cfg").string());
    write_trace_files(res.trace, cfg.dim, dir.string(), cfg.solver.max_level);
    {
        Population final_pop = p;
        if (!res.trace.opinions.empty()) final_pop.opinions = res.trace.opinions.back();
        save_population_csv(final_pop, (dir / "population.csv").string());
    }
    write_sweep_csv({rec}, (dir / "metrics.csv").string());
    return res;
}

std::vector<MetricsRecord> sweep_homophily(const ExperimentConfig& cfg,
                                           const std::vector<double>& sigmas, int jobs) {
    cfg.validate();
    if (sigmas.empty()) {
        throw std::invalid_argument("sweep_homophily: empty sigma list");
    }
    for (double s : sigmas) {
        if (!(s > 0.0)) {
            throw std::invalid_argument("sweep_homophily: sigma values must be positive");
        }
    }

    struct Task {
        double sigma;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (double s : sigmas) {
        for (std::uint64_t seed : cfg.seeds) tasks.push_back({s, seed});
    }
    std::stable_sort(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) {
        return a.sigma != b.sigma ? a.sigma < b.sigma : a.seed < b.seed;
    });

    std::vector<MetricsRecord> rows(tasks.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const size_t idx = next.fetch_add(1);
            if (idx >= tasks.size()) break;
            ExperimentConfig scenario = cfg;
            scenario.kernel.sigma = tasks[idx].sigma;
            try {
                rows[idx] = run_scenario(scenario, tasks[idx].seed).metrics;
            } catch (const std::exception& e) {
                rows[idx] = failed_record(tasks[idx].sigma, tasks[idx].seed, e.what());
            }
        }
    };

    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::filesystem::create_directories(cfg.output_dir);
    write_sweep_csv(rows, (std::filesystem::path(cfg.output_dir) / "sweep.csv").string());
    return rows;
}

void write_sweep_csv(const std::vector<MetricsRecord>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_sweep_csv: cannot write '" + path + "'");
    out << kSweepCsvHeader << '\n';
    for (const auto& r : rows) {
        out << format_double(r.sigma) << ',' << r.seed << ','
            << format_double(r.mean_dist_defender_goal) << ','
            << format_double(r.mean_dist_adversary_goal) << ','
            << format_double(r.final_bimodality) << ',' << format_double(r.J_a) << ','
            << format_double(r.J_d) << ',' << r.error << '\n';
    }
}

std::vector<MetricsRecord> read_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("read_sweep_csv: cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header) || header != kSweepCsvHeader) {
        throw ParseError(1, "read_sweep_csv: unexpected header");
    }
    std::vector<MetricsRecord> rows;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() == 7) cells.push_back("");  // empty trailing error field
        if (cells.size() != 8) {
            throw ParseError(lineno, "read_sweep_csv: wrong column count on line " +
                                         std::to_string(lineno));
        }
        MetricsRecord r;
        r.sigma = parse_double(cells[0]);
        r.seed = static_cast<std::uint64_t>(std::stoull(cells[1]));
        r.mean_dist_defender_goal = parse_double(cells[2]);
        r.mean_dist_adversary_goal = parse_double(cells[3]);
        r.final_bimodality = parse_double(cells[4]);
        r.J_a = parse_double(cells[5]);
        r.J_d = parse_double(cells[6]);
        r.error = cells[7];
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace opgame
