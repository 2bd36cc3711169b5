#include "titan/solver.hpp"

#include "titan/prox.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace titan {

void Hyperparams::validate(Index p) const {
    if (!(rho > 0.0)) throw InputError("rho must be positive");
    if (k < 1) throw InputError("k must be a positive integer");
    if (k > p) {
        throw InputError("k = " + std::to_string(k) + " violates k <= p (p = " +
                         std::to_string(p) + ")");
    }
    if (!(lambda_w >= 0.0) || !(lambda_q >= 0.0) || !(lambda_conn >= 0.0)) {
        throw InputError("penalties must be nonnegative");
    }
    if (adaptive_rho && (!(rho_balance > 1.0) || !(rho_scale > 1.0) || !(rho_max >= rho))) {
        throw InputError("adaptive rho needs rho_balance > 1, rho_scale > 1 and rho_max >= rho");
    }
    if (!(alpha > 0.0)) throw InputError("alpha must be positive");
    if (max_iter < 1) throw InputError("max_iter must be positive");
    if (!(eps_primal > 0.0) || !(eps_dual > 0.0)) throw InputError("tolerances must be positive");
    for (const auto& [edge, lam] : edge_lambda) {
        if (!(lam >= 0.0)) throw InputError("edge penalty for " + edge.first + "-" + edge.second + " is negative");
    }
}

std::size_t TrainedModel::task_index(const std::string& road) const {
    const auto it = std::find(tasks.begin(), tasks.end(), road);
    if (it == tasks.end()) throw InputError("unknown task: " + road);
    return static_cast<std::size_t>(it - tasks.begin());
}

SolverState initial_state(Index p, std::size_t num_tasks, const Hyperparams& hp) {
    hp.validate(p);
    const Index k = hp.k;
    const auto T = static_cast<Index>(num_tasks);
    SolverState s;
    s.Q = Matrix::Identity(p, k);
    if (hp.q_init == QInit::perturbed_identity) {
        std::mt19937_64 engine(hp.seed);
        std::uniform_real_distribution<double> noise(0.0, 0.01);
        for (Index j = 0; j < k; ++j) {
            for (Index i = 0; i < p; ++i) s.Q(i, j) += noise(engine);
            s.Q.col(j).normalize();
        }
    }
    s.W = Matrix::Zero(k, T);
    s.U_W = s.W;
    s.U_Q = s.Q;
    s.Lambda1 = Matrix::Zero(k, T);
    s.Lambda2 = Matrix::Zero(p, k);
    s.Lambda3 = Matrix::Zero(k, k);
    return s;
}

namespace {

Matrix coupling_weights(const TaskGraph& graph, const Hyperparams& hp) {
    Matrix c = graph.adjacency * hp.lambda_conn;
    for (const auto& [edge, lam] : hp.edge_lambda) {
        const auto i = static_cast<Index>(graph.index_of(edge.first));
        const auto j = static_cast<Index>(graph.index_of(edge.second));
        if (graph.adjacency(i, j) == 0.0) {
            throw InputError("edge penalty given for non-adjacent roads " + edge.first + ", " + edge.second);
        }
        c(i, j) = c(j, i) = lam;
    }
    return c;
}

void check_shapes(const MultiTaskDataset& data, const Matrix& Q, const Matrix& W) {
    const auto T = static_cast<Index>(data.num_tasks());
    if (Q.rows() != data.p() || W.rows() != Q.cols() || W.cols() != T) {
        throw InputError("shape mismatch: Q is " + std::to_string(Q.rows()) + "x" +
                         std::to_string(Q.cols()) + ", W is " + std::to_string(W.rows()) + "x" +
                         std::to_string(W.cols()) + " for p = " + std::to_string(data.p()) +
                         ", T = " + std::to_string(T));
    }
}

double connectivity_penalty(const Matrix& coupling, const Matrix& W) {
    double total = 0.0;
    for (Index i = 0; i < W.cols(); ++i) {
        for (Index j = 0; j < W.cols(); ++j) {
            if (coupling(i, j) != 0.0) total += coupling(i, j) * (W.col(i) - W.col(j)).squaredNorm();
        }
    }
    return 0.5 * total;
}

}  // namespace

double objective(const MultiTaskDataset& data, const Matrix& Q, const Matrix& W,
                 const Hyperparams& hp) {
    check_shapes(data, Q, W);
    double loss = 0.0;
    for (std::size_t r = 0; r < data.num_tasks(); ++r) {
        const auto& task = data.tasks[r];
        loss += (task.X * (Q * W.col(static_cast<Index>(r))) - task.Y).squaredNorm() /
                static_cast<double>(task.n());
    }
    return loss + hp.lambda_w * norm_l21(W) + hp.lambda_q * norm_l1(Q) +
           connectivity_penalty(coupling_weights(data.graph, hp), W);
}

TitanProblem::TitanProblem(const MultiTaskDataset& data, Hyperparams hp)
    : data_(data), hp_(std::move(hp)), p_(data.p()) {
    data.validate();
    hp_.validate(p_);
    gram_.reserve(data.num_tasks());
    for (const auto& task : data.tasks) {
        const double inv_n = 1.0 / static_cast<double>(task.n());
        gram_.push_back(task.X.transpose() * task.X * inv_n);
        xty_.push_back(task.X.transpose() * task.Y * inv_n);
        yy_.push_back(task.Y.squaredNorm() * inv_n);
    }
    coupling_ = coupling_weights(data.graph, hp_);
}

void TitanProblem::set_rho(double rho) {
    if (!(rho > 0.0)) throw InputError("rho must be positive");
    hp_.rho = rho;
}

double TitanProblem::smooth_lagrangian(const SolverState& s) const {
    return smooth_lagrangian(s, s.Q);
}

double TitanProblem::smooth_lagrangian(const SolverState& s, const Matrix& Q) const {
    double value = 0.0;
    for (std::size_t r = 0; r < gram_.size(); ++r) {
        const Vector beta = Q * s.W.col(static_cast<Index>(r));
        value += beta.dot(gram_[r] * beta) - 2.0 * beta.dot(xty_[r]) + yy_[r];
    }
    value += connectivity_penalty(coupling_, s.W);
    const Matrix dW = s.W - s.U_W;
    const Matrix dQ = Q - s.U_Q;
    value += (s.Lambda1.array() * dW.array()).sum() + (s.Lambda2.array() * dQ.array()).sum();
    value += 0.5 * hp_.rho * (dW.squaredNorm() + dQ.squaredNorm());
    if (hp_.orthogonality) {
        const Matrix gap = Q.transpose() * Q - Matrix::Identity(Q.cols(), Q.cols());
        value += (s.Lambda3.array() * gap.array()).sum() + 0.5 * hp_.rho * gap.squaredNorm();
    }
    return value;
}

Vector TitanProblem::grad_W_r(std::size_t r, const SolverState& s) const {
    const auto c = static_cast<Index>(r);
    const Vector w = s.W.col(c);
    Vector g = 2.0 * s.Q.transpose() * (gram_[r] * (s.Q * w) - xty_[r]);
    g += s.Lambda1.col(c) + hp_.rho * (w - s.U_W.col(c));
    for (Index j = 0; j < s.W.cols(); ++j) {
        if (coupling_(c, j) != 0.0) g += 2.0 * coupling_(c, j) * (w - s.W.col(j));
    }
    return g;
}

Matrix TitanProblem::subproblem_hessian(std::size_t r, const Matrix& Q) const {
    const double diag = hp_.rho + 2.0 * coupling_.row(static_cast<Index>(r)).sum();
    Matrix H = 2.0 * Q.transpose() * gram_[r] * Q;
    H.diagonal().array() += diag;
    return H;
}

Vector TitanProblem::subproblem_rhs(std::size_t r, const SolverState& s) const {
    const auto c = static_cast<Index>(r);
    Vector rhs = 2.0 * s.Q.transpose() * xty_[r] - s.Lambda1.col(c) + hp_.rho * s.U_W.col(c);
    for (Index j = 0; j < s.W.cols(); ++j) {
        if (coupling_(c, j) != 0.0) rhs += 2.0 * coupling_(c, j) * s.W.col(j);
    }
    return rhs;
}

Vector TitanProblem::solve_W_r_exact(std::size_t r, const SolverState& s) const {
    const Matrix H = subproblem_hessian(r, s.Q);
    const Vector rhs = subproblem_rhs(r, s);
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("W subproblem for task " + data_.tasks[r].road_id +
                             " is not positive definite");
    }
    return llt.solve(rhs);
}

Vector TitanProblem::solve_W_r_gradient(std::size_t r, const SolverState& s) const {
    const Matrix H = subproblem_hessian(r, s.Q);
    const Vector rhs = subproblem_rhs(r, s);

    Vector v = Vector::Ones(H.rows()).normalized();
    double lipschitz = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Vector hv = H * v;
        lipschitz = hv.norm();
        if (lipschitz == 0.0) break;
        v = hv / lipschitz;
    }
    // Power iteration can undershoot the top eigenvalue; pad it slightly.
    lipschitz = std::max(lipschitz * 1.01, hp_.rho);

    Vector w = s.W.col(static_cast<Index>(r));
    for (int step = 0; step < 25; ++step) w -= (H * w - rhs) / lipschitz;
    return w;
}

Matrix TitanProblem::grad_Q(const SolverState& s) const {
    Matrix g = s.Lambda2 + hp_.rho * (s.Q - s.U_Q);
    for (std::size_t r = 0; r < gram_.size(); ++r) {
        const Vector w = s.W.col(static_cast<Index>(r));
        g += 2.0 * (gram_[r] * (s.Q * w) - xty_[r]) * w.transpose();
    }
    if (hp_.orthogonality) {
        const Index k = s.Q.cols();
        g += 2.0 * s.Q * s.Lambda3 +
             2.0 * hp_.rho * s.Q * (s.Q.transpose() * s.Q - Matrix::Identity(k, k));
    }
    return g;
}

QStep TitanProblem::update_Q(const SolverState& s, const Matrix& g) const {
    if (g.rows() != s.Q.rows() || g.cols() != s.Q.cols()) {
        throw InputError("Q gradient has the wrong shape");
    }
    const double before = smooth_lagrangian(s, s.Q);
    double step = hp_.alpha;
    for (int halvings = 0; halvings <= 30; ++halvings, step *= 0.5) {
        Matrix candidate = clip_nonneg(s.Q - step * g);
        if (smooth_lagrangian(s, candidate) <= before) return {std::move(candidate), step, false};
    }
    return {s.Q, 0.0, true};
}

std::pair<Matrix, Matrix> update_duals(const SolverState& s, const Hyperparams& hp) {
    if (!(hp.rho > 0.0)) throw InputError("rho must be positive");
    return {prox_l21(s.W + s.Lambda1 / hp.rho, hp.lambda_w / hp.rho),
            soft_threshold_nonneg(s.Q + s.Lambda2 / hp.rho, hp.lambda_q / hp.rho)};
}

Multipliers update_multipliers(const SolverState& s, const Hyperparams& hp) {
    if (!(hp.rho > 0.0)) throw InputError("rho must be positive");
    Multipliers m;
    m.Lambda1 = s.Lambda1 + hp.rho * (s.W - s.U_W);
    m.Lambda2 = s.Lambda2 + hp.rho * (s.Q - s.U_Q);
    if (hp.orthogonality) {
        const Index k = s.Q.cols();
        const Matrix l3 = s.Lambda3 + hp.rho * (s.Q.transpose() * s.Q - Matrix::Identity(k, k));
        m.Lambda3 = 0.5 * (l3 + l3.transpose());
    } else {
        m.Lambda3 = s.Lambda3;
    }
    return m;
}

Residuals residuals(const SolverState& prev, const SolverState& next, const Hyperparams& hp) {
    Residuals res;
    res.primal = (next.W - next.U_W).norm() + (next.Q - next.U_Q).norm();
    if (hp.orthogonality) {
        const Index k = next.Q.cols();
        res.primal += (next.Q.transpose() * next.Q - Matrix::Identity(k, k)).norm();
    }
    res.dual = hp.rho * ((next.U_W - prev.U_W).norm() + (next.U_Q - prev.U_Q).norm());
    return res;
}

namespace {

void require_finite(const SolverState& s, int iter) {
    const std::pair<const char*, const Matrix*> vars[] = {
        {"W", &s.W},         {"Q", &s.Q},         {"U_W", &s.U_W},    {"U_Q", &s.U_Q},
        {"Lambda1", &s.Lambda1}, {"Lambda2", &s.Lambda2}, {"Lambda3", &s.Lambda3}};
    for (const auto& [name, m] : vars) {
        if (!m->allFinite()) {
            throw NumericalError(std::string("non-finite value in ") + name + " at iteration " +
                                 std::to_string(iter));
        }
    }
}

}  // namespace

TrainedModel fit(const MultiTaskDataset& data, const Hyperparams& hp) {
    TitanProblem problem(data, hp);
    Hyperparams work = hp;
    const std::size_t T = data.num_tasks();
    const Index k = hp.k;

    SolverState s = initial_state(data.p(), T, hp);
    TrainedModel model;
    model.tasks = data.graph.tasks;
    model.hyperparams = hp;

    for (int it = 1; it <= hp.max_iter; ++it) {
        SolverState prev;
        prev.U_W = s.U_W;
        prev.U_Q = s.U_Q;

        // Gauss-Seidel sweep: later tasks see the already updated neighbours.
        for (std::size_t r = 0; r < T; ++r) {
            s.W.col(static_cast<Index>(r)) = hp.inner_w_solve == InnerWSolve::exact
                                                  ? problem.solve_W_r_exact(r, s)
                                                  : problem.solve_W_r_gradient(r, s);
        }
        if (hp.update_q) {
            const QStep step = problem.update_Q(s, problem.grad_Q(s));
            if (step.stalled) {
                ++s.stalls;
            } else {
                s.Q = step.Q;
            }
        }
        std::tie(s.U_W, s.U_Q) = update_duals(s, work);
        Multipliers m = update_multipliers(s, work);
        s.Lambda1 = std::move(m.Lambda1);
        s.Lambda2 = std::move(m.Lambda2);
        s.Lambda3 = std::move(m.Lambda3);
        require_finite(s, it);

        const Residuals res = residuals(prev, s, work);
        const double orth_gap = (s.Q.transpose() * s.Q - Matrix::Identity(k, k)).norm();
        s.iter = it;
        s.primal_residual = res.primal;
        s.dual_residual = res.dual;
        model.history.primal.push_back(res.primal);
        model.history.dual.push_back(res.dual);
        model.history.orthogonality_gap.push_back(orth_gap);
        model.history.objective.push_back(objective(data, s.Q, s.W, hp));

        if (res.primal < hp.eps_primal && res.dual < hp.eps_dual) {
            model.converged = true;
            break;
        }
        if (hp.adaptive_rho) {
            double rho = work.rho;
            if (res.primal > hp.rho_balance * res.dual) {
                rho = std::min(rho * hp.rho_scale, hp.rho_max);
            } else if (res.dual > hp.rho_balance * res.primal) {
                rho = std::max(rho / hp.rho_scale, hp.rho);
            }
            if (rho != work.rho) {
                work.rho = rho;
                problem.set_rho(rho);
            }
        }
    }

    model.Q = s.Q;
    model.W = s.W;
    model.iterations = s.iter;
    model.final_residuals = {s.primal_residual, s.dual_residual};
    model.orthogonality_gap = (s.Q.transpose() * s.Q - Matrix::Identity(k, k)).norm();
    model.final_rho = work.rho;
    return model;
}

Vector predict(const TrainedModel& model, const Matrix& X, const std::string& task) {
    const std::size_t r = model.task_index(task);
    if (X.cols() != model.p()) {
        throw InputError("input has " + std::to_string(X.cols()) + " columns, model expects " +
                         std::to_string(model.p()));
    }
    return X * (model.Q * model.W.col(static_cast<Index>(r)));
}

}  // namespace titan
