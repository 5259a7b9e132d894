#include "opgame/dynamics.hpp"

#include "opgame/errors.hpp"
#include "opgame/graph_model.hpp"

#include <Eigen/LU>

#include <cmath>

namespace opgame {

void DynamicsParams::validate() const {
    if (!(alpha >= 0.0) || !(alpha < 1.0)) {
        throw std::invalid_argument("dynamics: alpha must be in [0, 1)");
    }
    if (!(kappa_a > 0.0) || !(kappa_d > 0.0)) {
        throw std::invalid_argument("dynamics: decay rates must be positive");
    }
    if (!(lambda >= 0.0) || !(lambda <= 1.0)) {
        throw std::invalid_argument("dynamics: lambda must be in [0, 1]");
    }
    if (!(eta >= 0.0)) {
        throw std::invalid_argument("dynamics: eta must be non-negative");
    }
    if (!(sigmoid_gain > 0.0)) {
        throw std::invalid_argument("dynamics: sigmoid gain must be positive");
    }
}

Vec exposure_probabilities(const Vec& u, const Population& p, const KernelConfig& k) {
    p.validate();
    if (u.size() != p.dim()) {
        throw std::invalid_argument("exposure_probabilities: message dimension mismatch");
    }
    Vec out(p.n());
    for (int i = 0; i < p.n(); ++i) {
        out(i) = kernel_eval(u, p.opinions.row(i).transpose(), k);
    }
    return out;
}

std::vector<Vec> propagate_micro(const Mat& w, const Vec& p_a, const Vec& p_d,
                                 const DynamicsParams& dp, int s_max) {
    dp.validate();
    if (s_max < 1) {
        throw std::invalid_argument("propagate_micro: s_max must be >= 1");
    }
    const auto n = w.rows();
    if (w.cols() != n || p_a.size() != n || p_d.size() != n) {
        throw std::invalid_argument("propagate_micro: shape mismatch");
    }

    std::vector<Vec> ys;
    ys.reserve(static_cast<size_t>(s_max) + 1);
    ys.push_back(Vec::Zero(n));
    for (int s = 0; s < s_max; ++s) {
        const double decay_a = std::exp(-dp.kappa_a * s);
        const double decay_d = std::exp(-dp.kappa_d * s);
        ys.push_back(dp.alpha * (w * ys.back()) - decay_a * p_a + decay_d * p_d);
    }
    return ys;
}

Vec accumulated_evidence(const Mat& w, const Vec& p_a, const Vec& p_d,
                         const DynamicsParams& dp) {
    dp.validate();
    const auto n = w.rows();
    if (w.cols() != n || p_a.size() != n || p_d.size() != n) {
        throw std::invalid_argument("accumulated_evidence: shape mismatch");
    }

    const double c_a = std::exp(-dp.kappa_a) / (1.0 - std::exp(-dp.kappa_a));
    const double c_d = std::exp(-dp.kappa_d) / (1.0 - std::exp(-dp.kappa_d));
    const Vec rhs = c_d * p_d - c_a * p_a;

    const Mat system = Mat::Identity(n, n) - dp.alpha * w;
    const Vec y = system.partialPivLu().solve(rhs);
    if (!y.allFinite()) {
        throw NumericError("accumulated_evidence: linear solve produced non-finite values");
    }
    return y;
}

double sigmoid(double y, const DynamicsParams& dp) {
    const double z = dp.sigmoid_gain * y;
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Population opinion_update_with_evidence(const Population& p, const MessagePair& msgs,
                                        const DynamicsParams& dp, const Vec& evidence) {
    p.validate();
    dp.validate();
    const int d = p.dim();
    if (msgs.adversary.size() != d || msgs.defender.size() != d) {
        throw std::invalid_argument("opinion update: message dimension mismatch");
    }
    if (evidence.size() != p.n()) {
        throw std::invalid_argument("opinion update: evidence length mismatch");
    }

    Population next = p;
    for (int i = 0; i < p.n(); ++i) {
        double rate = dp.eta * std::abs(evidence(i));
        if (dp.clamp_rate) rate = std::min(rate, 1.0);
        const double capture = sigmoid(evidence(i), dp);
        const Eigen::RowVectorXd target =
            capture * msgs.defender.transpose() + (1.0 - capture) * msgs.adversary.transpose();
        next.opinions.row(i) =
            (1.0 - dp.lambda) * p.initial_opinions.row(i) +
            dp.lambda * (p.opinions.row(i) + rate * (target - p.opinions.row(i)));
    }
    return next;
}

Population opinion_step(const Population& p, const MessagePair& msgs,
                        const DynamicsParams& dp, const KernelConfig& k) {
    const Mat w = build_weight_matrix(p, k);
    const Vec p_a = exposure_probabilities(msgs.adversary, p, k);
    const Vec p_d = exposure_probabilities(msgs.defender, p, k);
    const Vec evidence = accumulated_evidence(w, p_a, p_d, dp);
    return opinion_update_with_evidence(p, msgs, dp, evidence);
}

} // namespace opgame
