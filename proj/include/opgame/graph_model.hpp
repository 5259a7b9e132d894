#ifndef OPGAME_GRAPH_MODEL_HPP
#define OPGAME_GRAPH_MODEL_HPP

#include "opgame/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace opgame {

// Kernel values are clamped to this floor before use so that row
// normalization stays defined even when exp() underflows (extreme
// opinion distances or sigma sweeps toward 0).
inline constexpr double kKernelFloor = 1e-300;

// Gaussian interaction kernel exp(-|x-y|^2 / (2 sigma^2)).
// Symmetric, equal to 1 iff x == y, non-increasing in |x-y|.
double kernel_eval(const Vec& x, const Vec& y, const KernelConfig& k);

// Row normalization of the pairwise kernel matrix: W_ij = psi(x_i, x_j) /
// sum_{k != i} psi(x_i, x_k), zero diagonal, every row sums to 1.
Mat build_weight_matrix(const Population& p, const KernelConfig& k);

// One component of the synthetic initial-opinion mixture.
struct MixtureComponent {
    Vec mean;        // d
    Mat covariance;  // d x d, PSD
    double fraction; // share of the population drawn from this component
};

// Draw n opinions from the Gaussian mixture; initial_opinions == opinions.
// Component counts are fixed by largest-remainder apportionment, so the
// output is deterministic for a fixed seed.
Population generate_synthetic_population(int n,
                                         const std::vector<MixtureComponent>& spec,
                                         std::uint64_t seed);

// Undirected simple graph read from an edge list. Node ids are the
// distinct ids seen in the file (sorted ascending); edges store indices
// into `node_ids`, so the internal ids are contiguous.
struct EdgeListGraph {
    std::vector<long long> node_ids;
    std::vector<std::pair<int, int>> edges;  // index pairs, first < second

    int n() const { return static_cast<int>(node_ids.size()); }
};

// Parse a plain-text edge list (SNAP convention): one edge per line, two
// whitespace-separated non-negative integers, '#' starts a comment line.
// Self-loops are dropped (their endpoints still count as nodes) and
// duplicate edges are collapsed.
EdgeListGraph load_edge_list(const std::string& path);

// Inverse of load_edge_list up to edge ordering; writes original ids.
void save_edge_list(const EdgeListGraph& g, const std::string& path);

// 2-D Fruchterman-Reingold layout: repulsion k^2/dist between all pairs,
// attraction dist^2/k along edges, linearly cooled displacement cap.
// Positions are rescaled to zero mean and unit per-axis standard
// deviation and returned as both opinions and initial_opinions.
Population force_directed_embedding(const EdgeListGraph& g, int iterations,
                                    std::uint64_t seed);

// Population snapshot CSV: "id,x0_0,..,x0_{d-1},x_0,..,x_{d-1}".
void save_population_csv(const Population& p, const std::string& path);
Population load_population_csv(const std::string& path);

} // namespace opgame

#endif
