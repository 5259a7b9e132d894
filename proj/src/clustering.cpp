#include "opgame/clustering.hpp"

#include "opgame/errors.hpp"
#include "opgame/graph_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace opgame {

void ClusterAssignment::validate(int n) const {
    if (static_cast<int>(labels.size()) != n) {
        throw std::invalid_argument("cluster assignment: label count != population size");
    }
    std::vector<char> seen(m, 0);
    for (int l : labels) {
        if (l < 0 || l >= m) {
            throw std::invalid_argument("cluster assignment: label out of range");
        }
        seen[l] = 1;
    }
    for (int c = 0; c < m; ++c) {
        if (!seen[c]) {
            throw std::invalid_argument("cluster assignment: empty cluster " +
                                        std::to_string(c));
        }
    }
}

ClusterStats compute_cluster_stats(const Mat& members) {
    const int n = static_cast<int>(members.rows());
    const int d = static_cast<int>(members.cols());
    if (n < 1) {
        throw std::invalid_argument("compute_cluster_stats: empty cluster");
    }

    ClusterStats st;
    st.size = n;
    st.mean = members.colwise().mean().transpose();
    Mat centered = members.rowwise() - st.mean.transpose();
    st.covariance = centered.transpose() * centered / n;

    Eigen::SelfAdjointEigenSolver<Mat> es(st.covariance);
    st.principal_axis = es.eigenvectors().col(d - 1);
    // Fix the eigenvector sign so repeated runs agree.
    for (int j = 0; j < d; ++j) {
        if (std::abs(st.principal_axis(j)) > 1e-12) {
            if (st.principal_axis(j) < 0.0) st.principal_axis = -st.principal_axis;
            break;
        }
    }

    const Vec proj = centered * st.principal_axis;
    const double m2 = proj.squaredNorm() / n;
    const double m3 = proj.array().cube().sum() / n;
    const double m4 = proj.array().pow(4).sum() / n;
    if (m2 > 0.0) {
        st.skewness = m3 / std::pow(m2, 1.5);
        st.kurtosis = m4 / (m2 * m2);
    } else {
        st.skewness = std::numeric_limits<double>::quiet_NaN();
        st.kurtosis = std::numeric_limits<double>::quiet_NaN();
    }
    return st;
}

double bimodality_coefficient(const Vec& samples) {
    const int n = static_cast<int>(samples.size());
    if (n < 4) {
        throw UndefinedStatisticError(
            "bimodality_coefficient: need at least 4 samples, got " + std::to_string(n));
    }
    const double mean = samples.mean();
    const Eigen::ArrayXd c = samples.array() - mean;
    const double m2 = (c * c).sum() / n;
    if (!(m2 > 0.0)) {
        throw UndefinedStatisticError("bimodality_coefficient: zero variance");
    }
    const double m3 = (c * c * c).sum() / n;
    const double m4 = (c * c * c * c).sum() / n;
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    return (skew * skew + 1.0) / kurt;
}

std::vector<LinkageMerge> ward_linkage(const Mat& points) {
    const int n = static_cast<int>(points.rows());
    if (n < 1) {
        throw std::invalid_argument("ward_linkage: no points");
    }
    std::vector<LinkageMerge> merges;
    if (n == 1) return merges;
    merges.reserve(n - 1);

    // Squared-Euclidean distance matrix, updated in place by the
    // Lance-Williams recurrence for Ward's criterion.
    Mat dist(n, n);
    for (int i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            const double d2 = (points.row(i) - points.row(j)).squaredNorm();
            dist(i, j) = d2;
            dist(j, i) = d2;
        }
    }

    std::vector<char> active(n, 1);
    std::vector<double> size(n, 1.0);
    std::vector<int> rep(n);                 // minimal original index in the cluster
    std::iota(rep.begin(), rep.end(), 0);

    std::vector<int> chain;
    chain.reserve(n);
    int remaining = n;

    auto nearest = [&](int c) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (!active[j] || j == c) continue;
            if (dist(c, j) < best_d) {
                best_d = dist(c, j);
                best = j;
            }
        }
        return best;
    };

    while (remaining > 1) {
        if (chain.empty()) {
            for (int i = 0; i < n; ++i) {
                if (active[i]) {
                    chain.push_back(i);
                    break;
                }
            }
        }
        const int top = chain.back();
        const int nn = nearest(top);
        if (chain.size() >= 2 && nn == chain[chain.size() - 2]) {
            // Reciprocal nearest neighbors: merge nn and top into slot nn.
            chain.pop_back();
            chain.pop_back();
            const int a = nn;
            const int b = top;
            merges.push_back({std::min(rep[a], rep[b]), std::max(rep[a], rep[b]), dist(a, b)});

            const double sa = size[a], sb = size[b];
            for (int j = 0; j < n; ++j) {
                if (!active[j] || j == a || j == b) continue;
                const double sj = size[j];
                dist(a, j) = ((sa + sj) * dist(a, j) + (sb + sj) * dist(b, j) -
                              sj * dist(a, b)) /
                             (sa + sb + sj);
                dist(j, a) = dist(a, j);
            }
            active[b] = 0;
            size[a] = sa + sb;
            rep[a] = std::min(rep[a], rep[b]);
            --remaining;
        } else {
            chain.push_back(nn);
        }
    }

    // The chain algorithm does not emit merges in height order; a stable
    // sort by height yields a valid dendrogram order (children always
    // precede their parent) because Ward's criterion is reducible.
    std::stable_sort(merges.begin(), merges.end(),
                     [](const LinkageMerge& x, const LinkageMerge& y) {
                         return x.height < y.height;
                     });
    return merges;
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

// Labels for the partition obtained by applying the first `count` merges.
// Clusters are numbered by ascending minimal member index.
std::vector<int> cut_linkage(const std::vector<LinkageMerge>& merges, int n, int count) {
    UnionFind uf(n);
    for (int k = 0; k < count; ++k) {
        uf.unite(merges[k].a, merges[k].b);
    }
    std::vector<int> root_label(n, -1);
    std::vector<int> labels(n);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        const int r = uf.find(i);
        if (root_label[r] < 0) root_label[r] = next++;
        labels[i] = root_label[r];
    }
    return labels;
}

Mat gather_rows(const Mat& src, const std::vector<int>& idx) {
    Mat out(static_cast<int>(idx.size()), src.cols());
    for (size_t r = 0; r < idx.size(); ++r) {
        out.row(static_cast<int>(r)) = src.row(idx[r]);
    }
    return out;
}

std::vector<std::vector<int>> members_by_cluster(const ClusterAssignment& a, int n) {
    std::vector<std::vector<int>> members(a.m);
    for (int i = 0; i < n; ++i) {
        members[a.labels[i]].push_back(i);
    }
    return members;
}

} // namespace

ClusterAssignment initial_clustering(const Population& p, int m0, std::uint64_t seed) {
    (void)seed;  // Ward linkage is deterministic; kept for interface stability.
    p.validate();
    const int n = p.n();
    if (m0 < 1 || m0 > n) {
        throw std::invalid_argument("initial_clustering: m0 must be in [1, n]");
    }

    ClusterAssignment a;
    a.m = m0;
    if (m0 == n) {
        a.labels.resize(n);
        std::iota(a.labels.begin(), a.labels.end(), 0);
        return a;
    }
    const auto merges = ward_linkage(p.opinions);
    a.labels = cut_linkage(merges, n, n - m0);
    return a;
}

ClusterAssignment split_clusters(const ClusterAssignment& a, const Population& p,
                                 double threshold) {
    p.validate();
    const int n = p.n();
    a.validate(n);
    if (!(threshold > 0.0) || threshold > 1.0) {
        throw std::invalid_argument("split_clusters: threshold must be in (0, 1]");
    }

    const auto members = members_by_cluster(a, n);
    ClusterAssignment out;
    out.labels.assign(n, -1);
    int next_label = 0;

    for (int c = 0; c < a.m; ++c) {
        const auto& idx = members[c];
        bool split = false;
        std::vector<int> sub_labels;

        if (idx.size() >= 4) {
            const Mat pts = gather_rows(p.opinions, idx);
            const ClusterStats st = compute_cluster_stats(pts);
            const Vec proj = (pts.rowwise() - st.mean.transpose()) * st.principal_axis;
            try {
                if (bimodality_coefficient(proj) > threshold) {
                    const auto merges = ward_linkage(pts);
                    sub_labels = cut_linkage(merges, static_cast<int>(idx.size()),
                                             static_cast<int>(idx.size()) - 2);
                    split = true;
                }
            } catch (const UndefinedStatisticError&) {
                // Degenerate projection; leave the cluster whole.
            }
        }

        if (split) {
            const int base = next_label;
            next_label += 2;
            for (size_t r = 0; r < idx.size(); ++r) {
                out.labels[idx[r]] = base + sub_labels[r];
            }
        } else {
            for (int i : idx) out.labels[i] = next_label;
            ++next_label;
        }
    }
    out.m = next_label;
    return out;
}

namespace {

bool should_merge(const ClusterStats& si, const ClusterStats& sj, double epsilon) {
    const Vec diff = si.mean - sj.mean;
    const double d2 = diff.squaredNorm();
    if (std::sqrt(d2) <= epsilon) return true;
    const double qi = diff.dot(si.covariance * diff) / d2;
    const double qj = diff.dot(sj.covariance * diff) / d2;
    return d2 < std::min(qi, qj);
}

} // namespace

ClusterAssignment merge_clusters(const ClusterAssignment& a, const Population& p,
                                 double epsilon) {
    p.validate();
    const int n = p.n();
    a.validate(n);
    if (epsilon < 0.0) {
        throw std::invalid_argument("merge_clusters: epsilon must be >= 0");
    }

    auto members = members_by_cluster(a, n);
    std::vector<ClusterStats> stats(members.size());
    for (size_t c = 0; c < members.size(); ++c) {
        stats[c] = compute_cluster_stats(gather_rows(p.opinions, members[c]));
    }

    bool merged = true;
    while (merged) {
        merged = false;
        for (size_t i = 0; i < members.size(); ++i) {
            for (size_t j = i + 1; j < members.size();) {
                if (should_merge(stats[i], stats[j], epsilon)) {
                    members[i].insert(members[i].end(), members[j].begin(),
                                      members[j].end());
                    std::sort(members[i].begin(), members[i].end());
                    members.erase(members.begin() + static_cast<long>(j));
                    stats.erase(stats.begin() + static_cast<long>(j));
                    stats[i] = compute_cluster_stats(gather_rows(p.opinions, members[i]));
                    merged = true;
                } else {
                    ++j;
                }
            }
        }
    }

    ClusterAssignment out;
    out.m = static_cast<int>(members.size());
    out.labels.assign(n, -1);
    for (size_t c = 0; c < members.size(); ++c) {
        for (int i : members[c]) out.labels[i] = static_cast<int>(c);
    }
    return out;
}

ClusterAssignment refresh(const ClusterAssignment& a, const Population& p,
                          double threshold, double epsilon) {
    return merge_clusters(split_clusters(a, p, threshold), p, epsilon);
}

ReducedState reduce(const ClusterAssignment& a, const Population& p,
                    const KernelConfig& k, bool mass_weighted) {
    p.validate();
    const int n = p.n();
    a.validate(n);
    if (a.m < 2) {
        throw DegenerateReductionError(
            "reduce: need at least 2 clusters to form a quotient weight matrix");
    }

    const int d = p.dim();
    ReducedState rs;
    rs.centers = Mat::Zero(a.m, d);
    rs.initial_centers = Mat::Zero(a.m, d);
    rs.masses.assign(a.m, 0);
    for (int i = 0; i < n; ++i) {
        const int c = a.labels[i];
        rs.centers.row(c) += p.opinions.row(i);
        rs.initial_centers.row(c) += p.initial_opinions.row(i);
        rs.masses[c] += 1;
    }
    for (int c = 0; c < a.m; ++c) {
        rs.centers.row(c) /= rs.masses[c];
        rs.initial_centers.row(c) /= rs.masses[c];
    }

    Population centers_pop;
    centers_pop.opinions = rs.centers;
    centers_pop.initial_opinions = rs.initial_centers;
    rs.reduced_weights = build_weight_matrix(centers_pop, k);

    if (mass_weighted) {
        for (int i = 0; i < a.m; ++i) {
            for (int j = 0; j < a.m; ++j) {
                rs.reduced_weights(i, j) *= rs.masses[j];
            }
            const double rowsum = rs.reduced_weights.row(i).sum();
            rs.reduced_weights.row(i) /= rowsum;
        }
    }
    return rs;
}

} // namespace opgame
