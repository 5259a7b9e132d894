#include "opgame/graph_model.hpp"

#include "opgame/csv.hpp"
#include "opgame/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace opgame {

double kernel_eval(const Vec& x, const Vec& y, const KernelConfig& k) {
    k.validate();
    if (x.size() != y.size()) {
        throw std::invalid_argument("kernel_eval: dimension mismatch");
    }
    const double r2 = (x - y).squaredNorm();
    const double v = std::exp(-r2 / (2.0 * k.sigma * k.sigma));
    return std::max(v, kKernelFloor);
}

Mat build_weight_matrix(const Population& p, const KernelConfig& k) {
    p.validate();
    k.validate();
    const int n = p.n();
    const double inv2s2 = 1.0 / (2.0 * k.sigma * k.sigma);

    Mat w(n, n);
    w.setZero();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double r2 = (p.opinions.row(i) - p.opinions.row(j)).squaredNorm();
            const double v = std::max(std::exp(-r2 * inv2s2), kKernelFloor);
            w(i, j) = v;
            w(j, i) = v;
        }
    }
    for (int i = 0; i < n; ++i) {
        const double rowsum = w.row(i).sum();
        if (rowsum <= 0.0) {
            throw DegenerateRowError(
                i, "build_weight_matrix: off-diagonal kernel sum underflowed to 0 in row " +
                       std::to_string(i));
        }
        w.row(i) /= rowsum;
    }
    return w;
}

namespace {

// PSD square root via eigendecomposition; tolerates zero matrices and
// rank deficiency, rejects genuinely indefinite input.
Mat psd_factor(const Mat& cov) {
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    if (es.info() != Eigen::Success) {
        throw std::invalid_argument("covariance eigendecomposition failed");
    }
    const Vec& ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    Vec sq(ev.size());
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-10 * scale) {
            throw std::invalid_argument("covariance matrix is not positive semi-definite");
        }
        sq(i) = std::sqrt(std::max(ev(i), 0.0));
    }
    return es.eigenvectors() * sq.asDiagonal();
}

} // namespace

Population generate_synthetic_population(int n, const std::vector<MixtureComponent>& spec,
                                         std::uint64_t seed) {
    if (n < 2) {
        throw std::invalid_argument("generate_synthetic_population: n must be >= 2");
    }
    if (spec.empty()) {
        throw std::invalid_argument("generate_synthetic_population: empty mixture spec");
    }
    const int d = static_cast<int>(spec.front().mean.size());
    double total = 0.0;
    for (const auto& c : spec) {
        if (c.mean.size() != d || c.covariance.rows() != d || c.covariance.cols() != d) {
            throw std::invalid_argument("generate_synthetic_population: component shape mismatch");
        }
        if (c.fraction < 0.0) {
            throw std::invalid_argument("generate_synthetic_population: negative fraction");
        }
        total += c.fraction;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("generate_synthetic_population: fractions must sum to 1");
    }

    // Largest-remainder apportionment of n across components.
    const int m = static_cast<int>(spec.size());
    std::vector<int> counts(m);
    std::vector<std::pair<double, int>> remainders(m);
    int assigned = 0;
    for (int c = 0; c < m; ++c) {
        const double exact = spec[c].fraction * n;
        counts[c] = static_cast<int>(std::floor(exact));
        assigned += counts[c];
        remainders[c] = {exact - counts[c], c};
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int r = 0; r < n - assigned; ++r) {
        counts[remainders[r % m].second] += 1;
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Mat x(n, d);
    int row = 0;
    for (int c = 0; c < m; ++c) {
        const Mat factor = psd_factor(spec[c].covariance);
        for (int i = 0; i < counts[c]; ++i, ++row) {
            Vec z(d);
            for (int j = 0; j < d; ++j) z(j) = gauss(rng);
            x.row(row) = (spec[c].mean + factor * z).transpose();
        }
    }

    Population p;
    p.opinions = x;
    p.initial_opinions = x;
    return p;
}

EdgeListGraph load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("load_edge_list: cannot open '" + path + "'");
    }

    std::set<long long> ids;
    std::set<std::pair<long long, long long>> raw_edges;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream ls(line);
        long long a = 0, b = 0;
        std::string extra;
        if (!(ls >> a >> b) || (ls >> extra) || a < 0 || b < 0) {
            throw ParseError(lineno, "load_edge_list: malformed line " +
                                         std::to_string(lineno) + ": '" + line + "'");
        }
        ids.insert(a);
        ids.insert(b);
        if (a != b) {
            raw_edges.insert({std::min(a, b), std::max(a, b)});
        }
    }
    if (ids.empty()) {
        throw std::invalid_argument("load_edge_list: '" + path + "' contains no nodes");
    }

    EdgeListGraph g;
    g.node_ids.assign(ids.begin(), ids.end());
    std::map<long long, int> index;
    for (int i = 0; i < g.n(); ++i) index[g.node_ids[i]] = i;
    g.edges.reserve(raw_edges.size());
    for (const auto& e : raw_edges) {
        g.edges.emplace_back(index[e.first], index[e.second]);
    }
    return g;
}

void save_edge_list(const EdgeListGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_edge_list: cannot write '" + path + "'");
    }
    for (const auto& e : g.edges) {
        out << g.node_ids[e.first] << ' ' << g.node_ids[e.second] << '\n';
    }
}

Population force_directed_embedding(const EdgeListGraph& g, int iterations,
                                    std::uint64_t seed) {
    if (iterations < 1) {
        throw std::invalid_argument("force_directed_embedding: iterations must be >= 1");
    }
    const int n = g.n();
    if (n < 1) {
        throw std::invalid_argument("force_directed_embedding: empty graph");
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    Mat pos(n, 2);
    for (int i = 0; i < n; ++i) {
        pos(i, 0) = unif(rng);
        pos(i, 1) = unif(rng);
    }

    // Unit layout area; optimal pairwise spacing k = sqrt(area / n).
    const double k = std::sqrt(1.0 / n);
    const double t0 = 0.1;
    const double min_dist = 1e-9;

    Mat disp(n, 2);
    for (int it = 0; it < iterations; ++it) {
        disp.setZero();
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                Eigen::RowVector2d delta = pos.row(i) - pos.row(j);
                const double dist = std::max(delta.norm(), min_dist);
                const Eigen::RowVector2d push = delta / dist * (k * k / dist);
                disp.row(i) += push;
                disp.row(j) -= push;
            }
        }
        for (const auto& e : g.edges) {
            Eigen::RowVector2d delta = pos.row(e.first) - pos.row(e.second);
            const double dist = std::max(delta.norm(), min_dist);
            const Eigen::RowVector2d pull = delta / dist * (dist * dist / k);
            disp.row(e.first) -= pull;
            disp.row(e.second) += pull;
        }
        const double temp = t0 * (1.0 - static_cast<double>(it) / iterations);
        for (int i = 0; i < n; ++i) {
            const double len = disp.row(i).norm();
            if (len > min_dist) {
                pos.row(i) += disp.row(i) / len * std::min(len, temp);
            }
        }
    }

    // Zero mean, unit per-axis standard deviation (population convention).
    for (int axis = 0; axis < 2; ++axis) {
        const double mean = pos.col(axis).mean();
        pos.col(axis).array() -= mean;
        const double sd = std::sqrt(pos.col(axis).squaredNorm() / n);
        if (sd > 1e-12) {
            pos.col(axis) /= sd;
        }
    }

    Population p;
    p.opinions = pos;
    p.initial_opinions = pos;
    return p;
}

void save_population_csv(const Population& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_population_csv: cannot write '" + path + "'");
    }
    const int d = p.dim();
    out << "id";
    for (int j = 0; j < d; ++j) out << ",x0_" << j;
    for (int j = 0; j < d; ++j) out << ",x_" << j;
    out << '\n';
    for (int i = 0; i < p.n(); ++i) {
        out << i;
        for (int j = 0; j < d; ++j) out << ',' << format_double(p.initial_opinions(i, j));
        for (int j = 0; j < d; ++j) out << ',' << format_double(p.opinions(i, j));
        out << '\n';
    }
}

Population load_population_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("load_population_csv: cannot open '" + path + "'");
    }
    std::string header;
    if (!std::getline(in, header)) {
        throw ParseError(1, "load_population_csv: empty file");
    }
    const int cols = static_cast<int>(std::count(header.begin(), header.end(), ',')) + 1;
    if (cols < 3 || (cols - 1) % 2 != 0) {
        throw ParseError(1, "load_population_csv: unexpected header '" + header + "'");
    }
    const int d = (cols - 1) / 2;

    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) vals.push_back(parse_double(cell));
        if (static_cast<int>(vals.size()) != cols) {
            throw ParseError(lineno, "load_population_csv: wrong column count on line " +
                                         std::to_string(lineno));
        }
        rows.push_back(std::move(vals));
    }

    Population p;
    p.initial_opinions.resize(rows.size(), d);
    p.opinions.resize(rows.size(), d);
    for (size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < d; ++j) {
            p.initial_opinions(static_cast<int>(i), j) = rows[i][1 + j];
            p.opinions(static_cast<int>(i), j) = rows[i][1 + d + j];
        }
    }
    return p;
}

} // namespace opgame
