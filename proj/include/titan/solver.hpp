#pragma once

#include "titan/common.hpp"
#include "titan/features.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace titan {

enum class InnerWSolve { exact, gradient };

enum class QInit {
    perturbed_identity,  // first k identity columns + U[0, 0.01] noise, columns normalized
    identity,            // first k identity columns exactly
};

struct Hyperparams {
    double lambda_w = 0.1;     // l2,1 penalty on W
    double lambda_q = 0.01;    // l1 penalty on Q
    double lambda_conn = 0.1;  // connectivity penalty shared by every edge
    double rho = 1.0;
    int k = 5;
    double alpha = 0.05;  // initial step for the Q backtracking search
    int max_iter = 2000;
    double eps_primal = 1e-3;
    double eps_dual = 1e-3;
    InnerWSolve inner_w_solve = InnerWSolve::exact;
    std::uint64_t seed = 0;

    /// When false the Lambda3 multiplier, the orthogonality penalty and its
    /// residual term are all skipped.
    bool orthogonality = true;
    /// When false Q stays at its initial value.
    bool update_q = true;
    QInit q_init = QInit::perturbed_identity;

    /// Residual balancing: rho *= rho_scale when primal > rho_balance * dual,
    /// rho /= rho_scale in the opposite case. Off keeps rho fixed.
    bool adaptive_rho = true;
    double rho_balance = 10.0;
    double rho_scale = 2.0;
    double rho_max = 1e4;

    /// Per-edge connectivity penalties keyed by (roadA, roadB) with roadA < roadB.
    std::map<std::pair<std::string, std::string>, double> edge_lambda;

    /// Throws InputError when an invariant fails; `p` is the feature dimension.
    void validate(Index p) const;
};

/// Primal, dual (auxiliary) and multiplier variables of the ADMM loop.
struct SolverState {
    Matrix W;        // k x T
    Matrix Q;        // p x k
    Matrix U_W;      // k x T
    Matrix U_Q;      // p x k
    Matrix Lambda1;  // k x T
    Matrix Lambda2;  // p x k
    Matrix Lambda3;  // k x k
    int iter = 0;
    double primal_residual = std::numeric_limits<double>::infinity();
    double dual_residual = std::numeric_limits<double>::infinity();
    int stalls = 0;
};

struct Residuals {
    double primal = 0.0;
    double dual = 0.0;
};

struct QStep {
    Matrix Q;
    double step = 0.0;
    bool stalled = false;
};

/// Per-iteration trace of a fit.
struct FitHistory {
    std::vector<double> objective;
    std::vector<double> primal;
    std::vector<double> dual;
    std::vector<double> orthogonality_gap;  // ||Q^T Q - I||_F
};

struct TrainedModel {
    Matrix Q;  // p x k
    Matrix W;  // k x T
    std::vector<std::string> tasks;
    Hyperparams hyperparams;
    bool converged = false;
    int iterations = 0;
    Residuals final_residuals;
    double orthogonality_gap = 0.0;
    double final_rho = 1.0;
    FitHistory history;  // not serialized

    Index p() const { return Q.rows(); }
    Index k() const { return Q.cols(); }
    std::size_t task_index(const std::string& road) const;
};

/// Starting point: Q from hp.q_init, W = 0, U_W = W, U_Q = Q, multipliers zero.
SolverState initial_state(Index p, std::size_t num_tasks, const Hyperparams& hp);

/// Full model objective: mean squared loss per task plus l2,1 on W, l1 on Q and
/// the connectivity penalty 1/2 sum_ij M_ij lambda_ij ||W_i - W_j||^2.
double objective(const MultiTaskDataset& data, const Matrix& Q, const Matrix& W,
                 const Hyperparams& hp);

/// Training data with per-task Gram caches and the connectivity weights.
/// Keeps a reference to `data`; the dataset must outlive the problem.
class TitanProblem {
 public:
    TitanProblem(const MultiTaskDataset& data, Hyperparams hp);

    Index p() const { return p_; }
    std::size_t num_tasks() const { return gram_.size(); }
    const Hyperparams& hyperparams() const { return hp_; }
    /// Changes the augmented-Lagrangian parameter (adaptive rho).
    void set_rho(double rho);
    /// T x T matrix of M_ij * lambda_ij.
    const Matrix& coupling() const { return coupling_; }

    /// Smooth part of the augmented Lagrangian as a function of (W, Q): loss,
    /// connectivity, multiplier inner products and the rho/2 quadratic penalties.
    double smooth_lagrangian(const SolverState& s) const;
    double smooth_lagrangian(const SolverState& s, const Matrix& Q) const;

    Vector grad_W_r(std::size_t r, const SolverState& s) const;
    /// Minimizes the smooth Lagrangian over column r by a k x k SPD solve.
    Vector solve_W_r_exact(std::size_t r, const SolverState& s) const;
    /// 25 gradient steps of size 1/L, L from power iteration on the subproblem Hessian.
    Vector solve_W_r_gradient(std::size_t r, const SolverState& s) const;

    Matrix grad_Q(const SolverState& s) const;
    /// Projected gradient step with backtracking from hp.alpha (at most 30 halvings).
    QStep update_Q(const SolverState& s, const Matrix& g) const;

 private:
    Matrix subproblem_hessian(std::size_t r, const Matrix& Q) const;
    Vector subproblem_rhs(std::size_t r, const SolverState& s) const;

    const MultiTaskDataset& data_;
    Hyperparams hp_;
    Index p_ = 0;
    std::vector<Matrix> gram_;  // X_r^T X_r / n_r
    std::vector<Vector> xty_;   // X_r^T Y_r / n_r
    std::vector<double> yy_;    // Y_r^T Y_r / n_r
    Matrix coupling_;
};

/// U_W = prox_l21(W + Lambda1/rho, lambda_w/rho), U_Q = soft_threshold_nonneg(Q + Lambda2/rho, lambda_q/rho).
std::pair<Matrix, Matrix> update_duals(const SolverState& s, const Hyperparams& hp);

struct Multipliers {
    Matrix Lambda1;
    Matrix Lambda2;
    Matrix Lambda3;
};

/// Dual ascent on the three constraints; Lambda3 is kept symmetric.
Multipliers update_multipliers(const SolverState& s, const Hyperparams& hp);

/// Primal residual of `next` and dual residual from the change of U_W, U_Q.
Residuals residuals(const SolverState& prev, const SolverState& next, const Hyperparams& hp);

/// ADMM training loop. Throws NumericalError on a non-finite iterate.
TrainedModel fit(const MultiTaskDataset& data, const Hyperparams& hp);

/// X * Q * W_task.
Vector predict(const TrainedModel& model, const Matrix& X, const std::string& task);

}  // namespace titan
