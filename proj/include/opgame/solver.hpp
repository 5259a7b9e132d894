#ifndef OPGAME_SOLVER_HPP
#define OPGAME_SOLVER_HPP

#include "opgame/clustering.hpp"
#include "opgame/dynamics.hpp"
#include "opgame/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace opgame {

enum class Player { adversary, defender };

// Horizon / level / replanning configuration of the game solver.
struct SolverConfig {
    int horizon = 5;           // H, macro-steps per solve
    int max_level = 10;        // highest cognition level
    double fd_step = 1e-5;     // relative finite-difference step for Jacobians
    int replan_interval = 1;   // macro-steps applied before re-solving
    int total_steps = 30;      // T, macro-steps of the whole run
    bool reroll_each_level = true;  // re-roll the reference trajectory under the
                                    // closed loop after every cognition level
    std::optional<Vec> initial_message_adversary;  // cold-start override
    std::optional<Vec> initial_message_defender;

    void validate() const;
};

// Quadratic cost of one player on the reduced state:
//   sum_t (s_t - goal)' Q (s_t - goal) + u_t' R u_t,
// with a terminal (s_H - goal)' Q (s_H - goal) term. Q is (m*d)x(m*d)
// and already includes the per-cluster mass weighting; goal is the
// stacked per-cluster goal.
struct CostSpec {
    Mat Q;     // (m*d) x (m*d), PSD
    Mat R;     // d x d, PD
    Vec goal;  // m*d

    void validate(int state_dim, int input_dim) const;
};

enum class GoalMode { initial_centers, fixed_point };

// Scenario-level cost description, turned into a CostSpec per macro step
// once cluster masses are known. q_dim is the per-opinion-dimension state
// cost of a single individual; the reduced Q scales it by cluster mass so
// a cluster of 500 weighs 500 individuals, not one.
struct PlayerCostConfig {
    Mat q_dim;                       // d x d PSD
    Mat r;                           // d x d PD
    GoalMode goal_mode = GoalMode::fixed_point;
    Vec goal_point;                  // d, used when goal_mode == fixed_point

    void validate(int d) const;
};

CostSpec make_cost_spec(const PlayerCostConfig& cfg, const ReducedState& rs);

// The one-step map on flattened cluster centers (row-major stacking of
// the m x d center matrix): opinion_step applied to the centers with the
// initial centers as anchors. Masses do not enter the dynamics.
struct ReducedMap {
    Mat initial_centers;  // m x d
    DynamicsParams dynamics;
    KernelConfig kernel;

    int m() const { return static_cast<int>(initial_centers.rows()); }
    int dim() const { return static_cast<int>(initial_centers.cols()); }
    int state_dim() const { return m() * dim(); }

    Vec step(const Vec& state, const Vec& u_adversary, const Vec& u_defender) const;
};

inline Vec flatten_state(const Mat& centers) {
    Mat t = centers.transpose();  // row-major stacking
    return Eigen::Map<Vec>(t.data(), t.size());
}

inline Mat unflatten_state(const Vec& state, int m, int d) {
    Mat t = Eigen::Map<const Mat>(state.data(), d, m);
    return t.transpose();
}

// Nominal trajectory the game is linearized around: states (H+1 rows of
// flattened centers) plus the input sequences that generated them.
struct ReferenceTrajectory {
    Mat states;    // (H+1) x (m*d)
    Mat inputs_a;  // H x d
    Mat inputs_d;  // H x d

    int horizon() const { return static_cast<int>(inputs_a.rows()); }
};

// Per-step first-order expansion of the reduced map around a reference:
//   s_{t+1} ~= s_ref_{t+1} + A_t ds_t + B_a_t du_a_t + B_d_t du_d_t + c_t,
// with c_t the rollout residual (zero for a self-consistent reference;
// recorded for validation).
struct LinearizedDynamics {
    std::vector<Mat> A;    // H, N x N
    std::vector<Mat> B_a;  // H, N x d
    std::vector<Mat> B_d;  // H, N x d
    std::vector<Vec> c;    // H, N

    int horizon() const { return static_cast<int>(A.size()); }
};

// Affine state feedback over a horizon, in absolute coordinates:
//   u_t(s) = gains[t] * s + offsets[t].
struct FeedbackPolicy {
    std::vector<Mat> gains;   // H, d x N
    std::vector<Vec> offsets; // H, d
    Player player = Player::defender;
    int level = 0;
    double predicted_cost = 0.0;  // linearized-model objective at solve time

    int horizon() const { return static_cast<int>(gains.size()); }
    Vec eval(const Vec& state, int step) const {
        return gains[step] * state + offsets[step];
    }

    // Constant-message policy (zero gain); the level-0 opponent model.
    static FeedbackPolicy constant(const Vec& message, int horizon, int state_dim,
                                   Player player);
};

// Roll the reduced map H steps under constant inputs (the level-0
// reference: both players repeat their previous message).
ReferenceTrajectory rollout_reference(const ReducedState& rs, const Vec& u_a_prev,
                                      const Vec& u_d_prev, const SolverConfig& cfg,
                                      const DynamicsParams& dp, const KernelConfig& k);

// Roll the reduced map H steps with both players following their
// policies. Throws DivergenceError(level) if the trajectory leaves the
// finite range.
ReferenceTrajectory rollout_closed_loop(const ReducedState& rs,
                                        const FeedbackPolicy& pol_a,
                                        const FeedbackPolicy& pol_d, int horizon,
                                        const DynamicsParams& dp, const KernelConfig& k,
                                        int level_for_errors);

// Central finite-difference Jacobians of the reduced map along the
// reference, with relative step cfg.fd_step per coordinate.
LinearizedDynamics linearize(const ReducedMap& map, const ReferenceTrajectory& traj,
                             const SolverConfig& cfg);

// Best response of `player` to a frozen opponent policy on the
// linearized game: the opponent's gains are folded into the state matrix
// and a backward Riccati recursion runs on the affine-augmented system
// (state extended with a constant coordinate that carries goal offsets,
// reference-input offsets, and the opponent's affine terms). The value
// matrices are checked to stay PSD at every backward step.
FeedbackPolicy lqr_best_response(const LinearizedDynamics& lin,
                                 const ReferenceTrajectory& ref,
                                 const FeedbackPolicy& opponent, const CostSpec& cost,
                                 Player player);

// Exact quadratic objective of `player` on the linearized closed loop
// when both players follow the given policies from the reference's
// initial state. Used for best-response certificates.
double evaluate_policy_cost(const LinearizedDynamics& lin, const ReferenceTrajectory& ref,
                            const FeedbackPolicy& pol_self, const FeedbackPolicy& pol_opp,
                            const CostSpec& cost, Player player);

struct SolveResult {
    FeedbackPolicy adversary;
    FeedbackPolicy defender;
    ReferenceTrajectory reference;   // trajectory of the final linearization
    LinearizedDynamics linearization;
};

// Level-iterated approximate feedback Stackelberg solve: starting from
// the constant-message level-0 reference, at each level the defender
// best-responds to the previous-level adversary, the adversary then
// best-responds to that fresh defender, and the reference is re-rolled
// under the new closed loop. After the top level the defender solves
// once more against the final adversary policy.
SolveResult bounded_cognition_solve(const ReducedState& rs, const CostSpec& cost_a,
                                    const CostSpec& cost_d, const SolverConfig& cfg,
                                    const DynamicsParams& dp, const KernelConfig& k,
                                    const MessagePair& u_prev);

// Clustering knobs of the receding-horizon loop.
struct ClusterConfig {
    int m0 = 20;
    double split_threshold = 0.55;
    double merge_epsilon = 1e-9;
    bool mass_weighted = false;

    void validate() const;
};

// Full history of one receding-horizon run.
struct Trace {
    std::vector<Mat> opinions;             // T+1 snapshots, n x d (index 0 = start)
    Mat messages_a;                        // T x d
    Mat messages_d;                        // T x d
    std::vector<std::vector<int>> labels;  // per applied step
    std::vector<int> cluster_counts;       // per applied step
    double J_a = 0.0;
    double J_d = 0.0;
    bool valid = true;
    std::string error;

    int steps() const { return static_cast<int>(messages_a.rows()); }
};

// The simulation loop: refresh clusters, reduce, solve, apply the first
// replan_interval policy steps to the full population (each step's
// messages evaluated at the freshly measured cluster centers), repeat
// until T macro-steps have been applied. Realized costs accumulate the
// full-population quadratic objectives. Solver divergence aborts the
// loop and flags the partial trace invalid.
Trace receding_horizon_run(const Population& p, const PlayerCostConfig& cost_a,
                           const PlayerCostConfig& cost_d, const SolverConfig& cfg,
                           const DynamicsParams& dp, const KernelConfig& k,
                           const ClusterConfig& cc);

} // namespace opgame

#endif
