#ifndef OPGAME_CONFIG_HPP
#define OPGAME_CONFIG_HPP

#include "opgame/graph_model.hpp"
#include "opgame/solver.hpp"
#include "opgame/types.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace opgame {

struct SyntheticNetworkSpec {
    int n = 300;
    std::vector<MixtureComponent> components;
};

struct EdgeListNetworkSpec {
    std::string path;
    int embed_iterations = 100;
};

// Everything one scenario needs. Parsed from a flat key = value file
// (dotted section keys, '#' comments); see the README for the schema.
struct ExperimentConfig {
    std::variant<SyntheticNetworkSpec, EdgeListNetworkSpec> network;
    int dim = 2;
    KernelConfig kernel;
    DynamicsParams dynamics;
    PlayerCostConfig cost_adversary;
    PlayerCostConfig cost_defender;
    SolverConfig solver;
    ClusterConfig clustering;
    std::vector<std::uint64_t> seeds{1};
    std::vector<double> sigma_grid{1.0};
    std::string output_dir = "out";

    void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical flat-key rendering; load_config(save) round-trips.
std::string serialize_config(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::string& path);

} // namespace opgame

#endif
