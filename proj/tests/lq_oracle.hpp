// Test-only oracles for the linear-quadratic solver: a stacked
// normal-equation minimizer and helpers to realize a feedback policy as
// an open-loop sequence. Independent of the Riccati implementation.
#ifndef OPGAME_TESTS_LQ_ORACLE_HPP
#define OPGAME_TESTS_LQ_ORACLE_HPP

#include "opgame/solver.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <random>
#include <vector>

namespace opgame::testing {

// Open-loop minimizer of the affine-quadratic horizon problem from a
// given initial deviation, by solving the stacked normal equations.
inline Vec stacked_qp_oracle(const LinearizedDynamics& lin, const ReferenceTrajectory& ref,
                             const CostSpec& cost, Player player, const Vec& ds0) {
    const int h = lin.horizon();
    const int n = static_cast<int>(lin.A.front().rows());
    const int d = static_cast<int>(lin.B_a.front().cols());
    const Mat& own_inputs = player == Player::adversary ? ref.inputs_a : ref.inputs_d;

    std::vector<Mat> m_of_t(h + 1, Mat::Zero(n, h * d));
    std::vector<Vec> phi(h + 1, Vec::Zero(n));
    phi[0] = ds0;
    for (int t = 0; t < h; ++t) {
        const Mat& b = player == Player::adversary ? lin.B_a[t] : lin.B_d[t];
        m_of_t[t + 1] = lin.A[t] * m_of_t[t];
        m_of_t[t + 1].middleCols(t * d, d) += b;
        phi[t + 1] = lin.A[t] * phi[t] + lin.c[t];
    }

    Mat hess = Mat::Zero(h * d, h * d);
    Vec lin_term = Vec::Zero(h * d);
    for (int t = 0; t <= h; ++t) {
        const Vec e = ref.states.row(t).transpose() - cost.goal + phi[t];
        hess += m_of_t[t].transpose() * cost.Q * m_of_t[t];
        lin_term += m_of_t[t].transpose() * cost.Q * e;
        if (t < h) {
            hess.block(t * d, t * d, d, d) += cost.R;
            lin_term.segment(t * d, d) += cost.R * own_inputs.row(t).transpose();
        }
    }
    return Eigen::LDLT<Mat>(hess).solve(-lin_term);
}

// Deviation inputs a feedback policy produces along its own closed loop,
// with an opponent that contributes nothing.
inline Vec feedback_open_loop(const LinearizedDynamics& lin, const ReferenceTrajectory& ref,
                              const FeedbackPolicy& pol, Player player, const Vec& ds0) {
    const int h = lin.horizon();
    const int d = static_cast<int>(lin.B_a.front().cols());
    Vec inputs(h * d);
    Vec ds = ds0;
    for (int t = 0; t < h; ++t) {
        const Vec s_abs = ref.states.row(t).transpose() + ds;
        const Vec u = pol.eval(s_abs, t);
        const Vec u_ref =
            (player == Player::adversary ? ref.inputs_a : ref.inputs_d).row(t).transpose();
        const Vec du = u - u_ref;
        inputs.segment(t * d, d) = du;
        const Mat& b = player == Player::adversary ? lin.B_a[t] : lin.B_d[t];
        ds = lin.A[t] * ds + b * du + lin.c[t];
    }
    return inputs;
}

// Arbitrary affine-quadratic instance with a contribution-free opponent.
struct RandomLq {
    LinearizedDynamics lin;
    ReferenceTrajectory ref;
    CostSpec cost;
    FeedbackPolicy opponent;
};

inline RandomLq random_lq(std::mt19937_64& rng, int n, int d, int h) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto rmat = [&](int r, int c, double scale) {
        Mat m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = scale * u(rng);
        return m;
    };

    RandomLq inst;
    inst.ref.states = rmat(h + 1, n, 1.0);
    inst.ref.inputs_a = Mat::Zero(h, d);
    inst.ref.inputs_d = Mat::Zero(h, d);
    for (int t = 0; t < h; ++t) {
        inst.lin.A.push_back(rmat(n, n, 0.9 / std::sqrt(n)));
        inst.lin.B_a.push_back(rmat(n, d, 1.0));
        inst.lin.B_d.push_back(rmat(n, d, 1.0));
        inst.lin.c.push_back(0.1 * rmat(n, 1, 1.0).col(0));
        inst.ref.inputs_d.row(t) = 0.5 * rmat(1, d, 1.0).row(0);
    }
    const Mat q_half = rmat(n, n, 1.0);
    inst.cost.Q = q_half.transpose() * q_half;
    const Mat r_half = rmat(d, d, 1.0);
    inst.cost.R = r_half.transpose() * r_half + 0.5 * Mat::Identity(d, d);
    inst.cost.goal = rmat(n, 1, 1.0).col(0);
    inst.opponent = FeedbackPolicy::constant(Vec::Zero(d), h, n, Player::adversary);
    return inst;
}

} // namespace opgame::testing

#endif
