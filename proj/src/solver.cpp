#include "opgame/solver.hpp"

#include "opgame/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace opgame {

void SolverConfig::validate() const {
    if (horizon < 1 || replan_interval < 1 || replan_interval > horizon ||
        horizon > total_steps) {
        throw std::invalid_argument(
            "solver: need 1 <= replan_interval <= horizon <= total_steps");
    }
    if (max_level < 1) {
        throw std::invalid_argument("solver: max_level must be >= 1");
    }
    if (!(fd_step > 0.0)) {
        throw std::invalid_argument("solver: fd_step must be positive");
    }
}

void CostSpec::validate(int state_dim, int input_dim) const {
    if (Q.rows() != state_dim || Q.cols() != state_dim) {
        throw std::invalid_argument("cost: Q must be state_dim x state_dim");
    }
    if (R.rows() != input_dim || R.cols() != input_dim) {
        throw std::invalid_argument("cost: R must be input_dim x input_dim");
    }
    if (goal.size() != state_dim) {
        throw std::invalid_argument("cost: goal must have state dimension");
    }
    Eigen::LLT<Mat> llt(R);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("cost: R must be positive definite");
    }
}

void PlayerCostConfig::validate(int d) const {
    if (q_dim.rows() != d || q_dim.cols() != d || r.rows() != d || r.cols() != d) {
        throw std::invalid_argument("cost config: per-dimension matrices must be d x d");
    }
    if (goal_mode == GoalMode::fixed_point && goal_point.size() != d) {
        throw std::invalid_argument("cost config: goal point must have dimension d");
    }
    Eigen::LLT<Mat> llt(r);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("cost config: r must be positive definite");
    }
}

CostSpec make_cost_spec(const PlayerCostConfig& cfg, const ReducedState& rs) {
    const int m = rs.m();
    const int d = rs.dim();
    cfg.validate(d);

    CostSpec cost;
    cost.Q = Mat::Zero(m * d, m * d);
    cost.goal = Vec::Zero(m * d);
    for (int c = 0; c < m; ++c) {
        cost.Q.block(c * d, c * d, d, d) = static_cast<double>(rs.masses[c]) * cfg.q_dim;
        if (cfg.goal_mode == GoalMode::initial_centers) {
            cost.goal.segment(c * d, d) = rs.initial_centers.row(c).transpose();
        } else {
            cost.goal.segment(c * d, d) = cfg.goal_point;
        }
    }
    cost.R = cfg.r;
    return cost;
}

Vec ReducedMap::step(const Vec& state, const Vec& u_adversary, const Vec& u_defender) const {
    Population centers;
    centers.opinions = unflatten_state(state, m(), dim());
    centers.initial_opinions = initial_centers;
    MessagePair msgs{u_adversary, u_defender};
    return flatten_state(opinion_step(centers, msgs, dynamics, kernel).opinions);
}

FeedbackPolicy FeedbackPolicy::constant(const Vec& message, int horizon, int state_dim,
                                        Player player) {
    FeedbackPolicy pol;
    pol.player = player;
    pol.level = 0;
    pol.gains.assign(horizon, Mat::Zero(message.size(), state_dim));
    pol.offsets.assign(horizon, message);
    return pol;
}

ReferenceTrajectory rollout_reference(const ReducedState& rs, const Vec& u_a_prev,
                                      const Vec& u_d_prev, const SolverConfig& cfg,
                                      const DynamicsParams& dp, const KernelConfig& k) {
    cfg.validate();
    const ReducedMap map{rs.initial_centers, dp, k};
    const int h = cfg.horizon;

    ReferenceTrajectory traj;
    traj.states.resize(h + 1, map.state_dim());
    traj.inputs_a.resize(h, map.dim());
    traj.inputs_d.resize(h, map.dim());

    Vec s = flatten_state(rs.centers);
    traj.states.row(0) = s.transpose();
    for (int t = 0; t < h; ++t) {
        traj.inputs_a.row(t) = u_a_prev.transpose();
        traj.inputs_d.row(t) = u_d_prev.transpose();
        s = map.step(s, u_a_prev, u_d_prev);
        traj.states.row(t + 1) = s.transpose();
    }
    return traj;
}

ReferenceTrajectory rollout_closed_loop(const ReducedState& rs,
                                        const FeedbackPolicy& pol_a,
                                        const FeedbackPolicy& pol_d, int horizon,
                                        const DynamicsParams& dp, const KernelConfig& k,
                                        int level_for_errors) {
    const ReducedMap map{rs.initial_centers, dp, k};

    ReferenceTrajectory traj;
    traj.states.resize(horizon + 1, map.state_dim());
    traj.inputs_a.resize(horizon, map.dim());
    traj.inputs_d.resize(horizon, map.dim());

    Vec s = flatten_state(rs.centers);
    traj.states.row(0) = s.transpose();
    for (int t = 0; t < horizon; ++t) {
        const Vec u_a = pol_a.eval(s, t);
        const Vec u_d = pol_d.eval(s, t);
        traj.inputs_a.row(t) = u_a.transpose();
        traj.inputs_d.row(t) = u_d.transpose();
        s = map.step(s, u_a, u_d);
        if (!s.allFinite() || !u_a.allFinite() || !u_d.allFinite()) {
            throw DivergenceError(level_for_errors,
                                  "closed-loop rollout diverged at level " +
                                      std::to_string(level_for_errors) + ", step " +
                                      std::to_string(t));
        }
        traj.states.row(t + 1) = s.transpose();
    }
    return traj;
}

namespace {

double fd_delta(double base, double rel_step) {
    return rel_step * std::max(1.0, std::abs(base));
}

void check_finite_column(const Vec& col, const char* block, int index) {
    if (!col.allFinite()) {
        throw NumericError(std::string("linearize: non-finite Jacobian column ") +
                           block + "[" + std::to_string(index) + "]");
    }
}

} // namespace

LinearizedDynamics linearize(const ReducedMap& map, const ReferenceTrajectory& traj,
                             const SolverConfig& cfg) {
    const int h = traj.horizon();
    const int n = map.state_dim();
    const int d = map.dim();

    LinearizedDynamics lin;
    lin.A.reserve(h);
    lin.B_a.reserve(h);
    lin.B_d.reserve(h);
    lin.c.reserve(h);

    for (int t = 0; t < h; ++t) {
        const Vec s0 = traj.states.row(t).transpose();
        const Vec ua0 = traj.inputs_a.row(t).transpose();
        const Vec ud0 = traj.inputs_d.row(t).transpose();

        Mat a(n, n);
        for (int j = 0; j < n; ++j) {
            const double hj = fd_delta(s0(j), cfg.fd_step);
            Vec sp = s0, sm = s0;
            sp(j) += hj;
            sm(j) -= hj;
            a.col(j) = (map.step(sp, ua0, ud0) - map.step(sm, ua0, ud0)) / (2.0 * hj);
            check_finite_column(a.col(j), "A", j);
        }

        Mat b_a(n, d), b_d(n, d);
        for (int j = 0; j < d; ++j) {
            const double hj = fd_delta(ua0(j), cfg.fd_step);
            Vec up = ua0, um = ua0;
            up(j) += hj;
            um(j) -= hj;
            b_a.col(j) = (map.step(s0, up, ud0) - map.step(s0, um, ud0)) / (2.0 * hj);
            check_finite_column(b_a.col(j), "B_a", j);
        }
        for (int j = 0; j < d; ++j) {
            const double hj = fd_delta(ud0(j), cfg.fd_step);
            Vec up = ud0, um = ud0;
            up(j) += hj;
            um(j) -= hj;
            b_d.col(j) = (map.step(s0, ua0, up) - map.step(s0, ua0, um)) / (2.0 * hj);
            check_finite_column(b_d.col(j), "B_d", j);
        }

        lin.A.push_back(std::move(a));
        lin.B_a.push_back(std::move(b_a));
        lin.B_d.push_back(std::move(b_d));
        lin.c.push_back(map.step(s0, ua0, ud0) - traj.states.row(t + 1).transpose());
    }
    return lin;
}

namespace {

// Augmented state-cost block at one reference point: quadratic in the
// deviation plus the linear and constant parts of (s_ref + ds - goal).
Mat augmented_state_cost(const Mat& q, const Vec& offset) {
    const auto n = q.rows();
    Mat qt(n + 1, n + 1);
    qt.topLeftCorner(n, n) = q;
    qt.topRightCorner(n, 1) = q * offset;
    qt.bottomLeftCorner(1, n) = (q * offset).transpose();
    qt(n, n) = offset.dot(q * offset);
    return qt;
}

void check_psd(const Mat& p, int step) {
    Eigen::SelfAdjointEigenSolver<Mat> es(p, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-8 * scale) {
        throw NumericError("riccati: value matrix lost positive semidefiniteness at step " +
                           std::to_string(step));
    }
}

} // namespace

FeedbackPolicy lqr_best_response(const LinearizedDynamics& lin,
                                 const ReferenceTrajectory& ref,
                                 const FeedbackPolicy& opponent, const CostSpec& cost,
                                 Player player) {
    const int h = lin.horizon();
    const int n = static_cast<int>(lin.A.front().rows());
    const int d = static_cast<int>(lin.B_a.front().cols());
    cost.validate(n, d);
    if (opponent.horizon() != h || ref.horizon() != h) {
        throw std::invalid_argument("lqr_best_response: horizon mismatch");
    }

    const bool self_is_adversary = (player == Player::adversary);
    const Mat& own_inputs = self_is_adversary ? ref.inputs_a : ref.inputs_d;
    const Mat& opp_inputs = self_is_adversary ? ref.inputs_d : ref.inputs_a;

    FeedbackPolicy pol;
    pol.player = player;
    pol.gains.assign(h, Mat::Zero(d, n));
    pol.offsets.assign(h, Vec::Zero(d));

    // Terminal value: state cost at the end of the horizon.
    Mat p = augmented_state_cost(cost.Q, ref.states.row(h).transpose() - cost.goal);

    for (int t = h - 1; t >= 0; --t) {
        const Mat& b_self = self_is_adversary ? lin.B_a[t] : lin.B_d[t];
        const Mat& b_opp = self_is_adversary ? lin.B_d[t] : lin.B_a[t];
        const Vec s_ref = ref.states.row(t).transpose();
        const Vec u_self_ref = own_inputs.row(t).transpose();
        const Vec u_opp_ref = opp_inputs.row(t).transpose();

        // Opponent policy in deviation coordinates around this reference.
        const Mat& k_opp = opponent.gains[t];
        const Vec m_opp = k_opp * s_ref + opponent.offsets[t] - u_opp_ref;

        const Mat a_cl = lin.A[t] + b_opp * k_opp;
        const Vec drift = b_opp * m_opp + lin.c[t];

        Mat a_aug = Mat::Zero(n + 1, n + 1);
        a_aug.topLeftCorner(n, n) = a_cl;
        a_aug.topRightCorner(n, 1) = drift;
        a_aug(n, n) = 1.0;
        Mat b_aug = Mat::Zero(n + 1, d);
        b_aug.topRows(n) = b_self;

        // Linear input-cost term 2 u_ref' R du enters through the constant
        // coordinate as a state-input cross term.
        Mat n_cross = Mat::Zero(n + 1, d);
        n_cross.row(n) = (cost.R * u_self_ref).transpose();

        const Mat s_mat = cost.R + b_aug.transpose() * p * b_aug;
        if (Eigen::LLT<Mat>(s_mat).info() != Eigen::Success) {
            throw NumericError("riccati: input-cost term is not positive definite at step " +
                               std::to_string(t));
        }
        const Eigen::LDLT<Mat> s_solver(s_mat);
        const Mat g = b_aug.transpose() * p * a_aug + n_cross.transpose();
        const Mat k_aug = -s_solver.solve(g);

        const Mat q_aug = augmented_state_cost(cost.Q, s_ref - cost.goal);
        p = q_aug + a_aug.transpose() * p * a_aug - g.transpose() * s_solver.solve(g);
        p(n, n) += u_self_ref.dot(cost.R * u_self_ref);
        p = 0.5 * (p + p.transpose());
        check_psd(p, t);

        const Mat k_dev = k_aug.leftCols(n);
        const Vec k_off = k_aug.col(n);
        pol.gains[t] = k_dev;
        pol.offsets[t] = u_self_ref + k_off - k_dev * s_ref;
    }
    pol.predicted_cost = p(n, n);  // value at zero deviation
    return pol;
}

double evaluate_policy_cost(const LinearizedDynamics& lin, const ReferenceTrajectory& ref,
                            const FeedbackPolicy& pol_self, const FeedbackPolicy& pol_opp,
                            const CostSpec& cost, Player player) {
    const int h = lin.horizon();
    const bool self_is_adversary = (player == Player::adversary);

    Vec ds = Vec::Zero(lin.A.front().rows());
    double total = 0.0;
    for (int t = 0; t < h; ++t) {
        const Vec s_ref = ref.states.row(t).transpose();
        const Vec s_abs = s_ref + ds;
        const Vec u_self = pol_self.eval(s_abs, t);
        const Vec u_opp = pol_opp.eval(s_abs, t);
        const Vec u_self_ref =
            (self_is_adversary ? ref.inputs_a : ref.inputs_d).row(t).transpose();
        const Vec u_opp_ref =
            (self_is_adversary ? ref.inputs_d : ref.inputs_a).row(t).transpose();

        const Vec err = s_abs - cost.goal;
        total += err.dot(cost.Q * err) + u_self.dot(cost.R * u_self);

        const Vec du_a = self_is_adversary ? (u_self - u_self_ref) : (u_opp - u_opp_ref);
        const Vec du_d = self_is_adversary ? (u_opp - u_opp_ref) : (u_self - u_self_ref);
        ds = lin.A[t] * ds + lin.B_a[t] * du_a + lin.B_d[t] * du_d + lin.c[t];
    }
    const Vec err = ref.states.row(h).transpose() + ds - cost.goal;
    total += err.dot(cost.Q * err);
    return total;
}

SolveResult bounded_cognition_solve(const ReducedState& rs, const CostSpec& cost_a,
                                    const CostSpec& cost_d, const SolverConfig& cfg,
                                    const DynamicsParams& dp, const KernelConfig& k,
                                    const MessagePair& u_prev) {
    cfg.validate();
    const int n = rs.m() * rs.dim();
    const int d = rs.dim();
    cost_a.validate(n, d);
    cost_d.validate(n, d);
    if (u_prev.adversary.size() != d || u_prev.defender.size() != d) {
        throw std::invalid_argument("bounded_cognition_solve: message dimension mismatch");
    }

    const ReducedMap map{rs.initial_centers, dp, k};
    ReferenceTrajectory ref =
        rollout_reference(rs, u_prev.adversary, u_prev.defender, cfg, dp, k);
    LinearizedDynamics lin = linearize(map, ref, cfg);

    FeedbackPolicy pol_a =
        FeedbackPolicy::constant(u_prev.adversary, cfg.horizon, n, Player::adversary);
    FeedbackPolicy pol_d =
        FeedbackPolicy::constant(u_prev.defender, cfg.horizon, n, Player::defender);

    for (int level = 1; level <= cfg.max_level; ++level) {
        pol_d = lqr_best_response(lin, ref, pol_a, cost_d, Player::defender);
        pol_d.level = level;
        pol_a = lqr_best_response(lin, ref, pol_d, cost_a, Player::adversary);
        pol_a.level = level;
        if (cfg.reroll_each_level) {
            ref = rollout_closed_loop(rs, pol_a, pol_d, cfg.horizon, dp, k, level);
            lin = linearize(map, ref, cfg);
        }
    }

    // Final follower re-solve keeps the Stackelberg hierarchy: the
    // defender best-responds to the adversary policy it now observes.
    pol_d = lqr_best_response(lin, ref, pol_a, cost_d, Player::defender);
    pol_d.level = cfg.max_level + 1;

    return SolveResult{std::move(pol_a), std::move(pol_d), std::move(ref), std::move(lin)};
}

void ClusterConfig::validate() const {
    if (m0 < 1) {
        throw std::invalid_argument("clustering: m0 must be >= 1");
    }
    if (!(split_threshold > 0.0) || split_threshold > 1.0) {
        throw std::invalid_argument("clustering: split threshold must be in (0, 1]");
    }
    if (merge_epsilon < 0.0) {
        throw std::invalid_argument("clustering: merge epsilon must be >= 0");
    }
}

namespace {

Mat measure_centers(const ClusterAssignment& a, const Population& p) {
    Mat centers = Mat::Zero(a.m, p.dim());
    std::vector<int> counts(a.m, 0);
    for (int i = 0; i < p.n(); ++i) {
        centers.row(a.labels[i]) += p.opinions.row(i);
        counts[a.labels[i]] += 1;
    }
    for (int c = 0; c < a.m; ++c) centers.row(c) /= counts[c];
    return centers;
}

double realized_state_cost(const Population& p, const PlayerCostConfig& cfg) {
    double total = 0.0;
    for (int i = 0; i < p.n(); ++i) {
        Vec diff;
        if (cfg.goal_mode == GoalMode::initial_centers) {
            diff = (p.opinions.row(i) - p.initial_opinions.row(i)).transpose();
        } else {
            diff = p.opinions.row(i).transpose() - cfg.goal_point;
        }
        total += diff.dot(cfg.q_dim * diff);
    }
    return total;
}

Vec default_initial_message(const SolverConfig& cfg, const PlayerCostConfig& cost,
                            const Population& p, Player player) {
    if (player == Player::adversary) {
        if (cfg.initial_message_adversary) return *cfg.initial_message_adversary;
        if (cost.goal_mode == GoalMode::fixed_point && cost.goal_point.norm() > 0.0) {
            return cost.goal_point / cost.goal_point.norm();
        }
        return Vec::Zero(p.dim());
    }
    if (cfg.initial_message_defender) return *cfg.initial_message_defender;
    return p.opinions.colwise().mean().transpose();
}

} // namespace

Trace receding_horizon_run(const Population& p0, const PlayerCostConfig& cost_a,
                           const PlayerCostConfig& cost_d, const SolverConfig& cfg,
                           const DynamicsParams& dp, const KernelConfig& k,
                           const ClusterConfig& cc) {
    p0.validate();
    cfg.validate();
    cc.validate();
    dp.validate();
    const int d = p0.dim();
    cost_a.validate(d);
    cost_d.validate(d);

    Population p = p0;
    const int total = cfg.total_steps;

    Trace tr;
    tr.opinions.reserve(total + 1);
    tr.opinions.push_back(p.opinions);
    tr.messages_a.resize(total, d);
    tr.messages_d.resize(total, d);
    tr.labels.reserve(total);
    tr.cluster_counts.reserve(total);

    MessagePair u_prev{default_initial_message(cfg, cost_a, p, Player::adversary),
                       default_initial_message(cfg, cost_d, p, Player::defender)};

    ClusterAssignment assignment;
    int t = 0;
    while (t < total) {
        if (t == 0) {
            assignment = initial_clustering(p, std::min(cc.m0, p.n()), 0);
        } else {
            assignment = refresh(assignment, p, cc.split_threshold, cc.merge_epsilon);
        }
        const ReducedState rs = reduce(assignment, p, k, cc.mass_weighted);
        const CostSpec spec_a = make_cost_spec(cost_a, rs);
        const CostSpec spec_d = make_cost_spec(cost_d, rs);

        SolveResult sol;
        try {
            sol = bounded_cognition_solve(rs, spec_a, spec_d, cfg, dp, k, u_prev);
        } catch (const DivergenceError& e) {
            tr.valid = false;
            tr.error = "macro-step " + std::to_string(t + 1) + ": " + e.what();
            tr.messages_a.conservativeResize(t, d);
            tr.messages_d.conservativeResize(t, d);
            return tr;
        }

        const int window = std::min(cfg.replan_interval, total - t);
        for (int j = 0; j < window; ++j) {
            const Vec s_cur = flatten_state(measure_centers(assignment, p));
            const Vec u_a = sol.adversary.eval(s_cur, j);
            const Vec u_d = sol.defender.eval(s_cur, j);

            p = opinion_step(p, MessagePair{u_a, u_d}, dp, k);

            tr.opinions.push_back(p.opinions);
            tr.messages_a.row(t) = u_a.transpose();
            tr.messages_d.row(t) = u_d.transpose();
            tr.labels.push_back(assignment.labels);
            tr.cluster_counts.push_back(assignment.m);

            tr.J_a += realized_state_cost(p, cost_a) + u_a.dot(cost_a.r * u_a);
            tr.J_d += realized_state_cost(p, cost_d) + u_d.dot(cost_d.r * u_d);

            u_prev = MessagePair{u_a, u_d};
            ++t;
        }
    }
    return tr;
}

} // namespace opgame
