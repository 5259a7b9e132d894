#ifndef OPGAME_TYPES_HPP
#define OPGAME_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>

namespace opgame {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Opinions live in R^d. One row per individual.
//
// `opinions` is the current state x_t, `initial_opinions` is x_0 (the
// anchor of the stubbornness term). The two usually start equal but are
// kept separate so a population can be handed to the dynamics mid-drift.
struct Population {
    Mat opinions;          // n x d
    Mat initial_opinions;  // n x d

    int n() const { return static_cast<int>(opinions.rows()); }
    int dim() const { return static_cast<int>(opinions.cols()); }

    void validate() const {
        if (opinions.rows() != initial_opinions.rows() ||
            opinions.cols() != initial_opinions.cols()) {
            throw std::invalid_argument(
                "population: opinions and initial_opinions must have identical shape");
        }
        if (opinions.rows() < 2) {
            throw std::invalid_argument("population: need at least 2 individuals");
        }
        if (opinions.cols() < 1) {
            throw std::invalid_argument("population: opinion dimension must be >= 1");
        }
        if (!opinions.allFinite() || !initial_opinions.allFinite()) {
            throw std::invalid_argument("population: opinions must be finite");
        }
    }
};

enum class KernelForm { gaussian };

// Interaction kernel; sigma is the homophily coefficient.
struct KernelConfig {
    KernelForm form = KernelForm::gaussian;
    double sigma = 1.0;

    void validate() const {
        if (!(sigma > 0.0)) {
            throw std::invalid_argument("kernel: sigma must be positive");
        }
    }
};

// Message positions injected by the two players at one macro step.
struct MessagePair {
    Vec adversary;  // u^a
    Vec defender;   // u^d
};

} // namespace opgame

#endif
