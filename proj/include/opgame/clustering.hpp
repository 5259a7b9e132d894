#ifndef OPGAME_CLUSTERING_HPP
#define OPGAME_CLUSTERING_HPP

#include "opgame/types.hpp"

#include <cstdint>
#include <vector>

namespace opgame {

// Partition of the population into m non-empty clusters; labels[i] in [0, m).
struct ClusterAssignment {
    std::vector<int> labels;
    int m = 0;

    void validate(int n) const;
};

// Per-cluster sample statistics. skewness/kurtosis are the moments of the
// member opinions projected onto the principal axis (top eigenvector of
// the covariance); kurtosis is non-excess (normal -> 3). Moments use the
// population convention (divide by size), matching the bimodality
// coefficient below.
struct ClusterStats {
    Vec mean;
    Mat covariance;
    int size = 0;
    Vec principal_axis;
    double skewness = 0.0;
    double kurtosis = 0.0;
};

ClusterStats compute_cluster_stats(const Mat& members);

// Cluster-level (quotient) state the game is solved on.
struct ReducedState {
    Mat centers;          // m x d, means of current opinions
    Mat initial_centers;  // m x d, means of members' initial opinions
    std::vector<int> masses;
    Mat reduced_weights;  // m x m, row-stochastic, zero diagonal

    int m() const { return static_cast<int>(centers.rows()); }
    int dim() const { return static_cast<int>(centers.cols()); }
};

// One merge step of the Ward dendrogram: the clusters containing points
// `a` and `b` were joined at the given cost (squared Ward distance).
struct LinkageMerge {
    int a = 0;
    int b = 0;
    double height = 0.0;
};

// Full agglomerative Ward linkage over the rows of `points`, computed
// with the nearest-neighbor chain algorithm (O(n^2), deterministic,
// nearest-neighbor ties broken by lowest index). Merges are reported on
// representative points (the minimal original index in each cluster).
std::vector<LinkageMerge> ward_linkage(const Mat& points);

// Cut the Ward dendrogram of the opinion vectors at m0 clusters.
// Deterministic; `seed` is accepted for interface stability but the
// algorithm has no random component.
ClusterAssignment initial_clustering(const Population& p, int m0, std::uint64_t seed);

// Sarle's bimodality coefficient (skewness^2 + 1) / kurtosis with
// population-moment estimators. Throws UndefinedStatisticError for
// fewer than 4 samples or zero variance. Benchmarks: normal 1/3,
// uniform 5/9, balanced two-point mass 1.
double bimodality_coefficient(const Vec& samples);

// Split every cluster whose principal-axis bimodality coefficient
// exceeds `threshold` into the 2-cluster Ward cut of its members.
// Applied once per call (no recursion); clusters with fewer than
// 4 members or undefined statistics are left alone.
ClusterAssignment split_clusters(const ClusterAssignment& a, const Population& p,
                                 double threshold);

// Greedily merge cluster pairs (ascending index order, repeated passes
// to a fixed point) whenever the mean separation D = mu_i - mu_j
// satisfies |D| <= epsilon or
//   |D|^2 < min( D'S_i D / D'D , D'S_j D / D'D ),
// the sufficient condition for the pair's mixture to be unimodal.
ClusterAssignment merge_clusters(const ClusterAssignment& a, const Population& p,
                                 double epsilon);

// Per-macro-step cluster maintenance: split, then merge.
ClusterAssignment refresh(const ClusterAssignment& a, const Population& p,
                          double threshold, double epsilon);

// Collapse the population onto cluster centers and re-derive the weight
// matrix on the centers. With mass_weighted set, kernel values toward a
// cluster are additionally scaled by its mass before row normalization.
ReducedState reduce(const ClusterAssignment& a, const Population& p,
                    const KernelConfig& k, bool mass_weighted = false);

} // namespace opgame

#endif
