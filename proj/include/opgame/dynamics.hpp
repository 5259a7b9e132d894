#ifndef OPGAME_DYNAMICS_HPP
#define OPGAME_DYNAMICS_HPP

#include "opgame/types.hpp"

#include <vector>

namespace opgame {

// Parameters of the micro-time diffusion and the macro-time opinion update.
//
// Positive accumulated evidence favors the defender. kappa_a / kappa_d are
// the interest-decay rates of the two message streams; neither is pinned
// by the reference experiments, so both default to 0.5.
struct DynamicsParams {
    double alpha = 0.3;        // per-step sharing probability, in [0, 1)
    double kappa_a = 0.5;      // adversary interest decay, > 0
    double kappa_d = 0.5;      // defender interest decay, > 0
    double lambda = 0.7;       // stubbornness toward initial opinion, in [0, 1]
    double eta = 0.5;          // learning rate scale, >= 0
    double sigmoid_gain = 1.0; // logistic gain, > 0
    bool clamp_rate = true;    // clamp eta*|y| to <= 1 (keeps the update a
                               // convex combination); disable to follow the
                               // raw update even when it extrapolates

    void validate() const;
};

// Probability that each individual observes a message at position u:
// the kernel between u and the individual's opinion.
Vec exposure_probabilities(const Vec& u, const Population& p, const KernelConfig& k);

// Micro-time evidence recursion, iterated literally from y_0 = 0:
//   y_{s+1} = alpha W y_s - p_a e^{-kappa_a s} + p_d e^{-kappa_d s},
// for s = 0 .. s_max-1. Returns y_0 .. y_{s_max}. This is the brute-force
// oracle against which the closed form is checked; note that the closed
// form sums the forcing from s = 1, one step later than this recursion
// started at s = 0 (see accumulated_evidence).
std::vector<Vec> propagate_micro(const Mat& w, const Vec& p_a, const Vec& p_d,
                                 const DynamicsParams& dp, int s_max);

// Total evidence accumulated over the (geometric) micro-time diffusion:
//   (I - alpha W)^{-1} [ p_d e^{-kappa_d}/(1-e^{-kappa_d})
//                      - p_a e^{-kappa_a}/(1-e^{-kappa_a}) ],
// computed by a dense LU solve. The e^{-kappa}/(1-e^{-kappa}) factors
// correspond to forcing terms summed from s = 1; iterating the micro
// recursion from y_0 = 0 with forcing from s = 0 instead yields
// 1/(1-e^{-kappa}). The closed form above is authoritative.
Vec accumulated_evidence(const Mat& w, const Vec& p_a, const Vec& p_d,
                         const DynamicsParams& dp);

// Logistic capture probability 1 / (1 + exp(-gain * y)); saturates
// without overflow.
double sigmoid(double y, const DynamicsParams& dp);

// Macro-time opinion update given precomputed evidence:
//   x_i <- (1-lambda) x0_i
//          + lambda ( x_i + r_i ( s(y_i) u_d + (1-s(y_i)) u_a - x_i ) ),
// with r_i = eta |y_i| clamped to <= 1 when clamp_rate is set.
Population opinion_update_with_evidence(const Population& p, const MessagePair& msgs,
                                        const DynamicsParams& dp, const Vec& evidence);

// One full macro step: weight matrix, exposures, accumulated evidence,
// then the update above. This composite is the map F the game is
// played on.
Population opinion_step(const Population& p, const MessagePair& msgs,
                        const DynamicsParams& dp, const KernelConfig& k);

} // namespace opgame

#endif
