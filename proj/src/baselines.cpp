#include "titan/baselines.hpp"

#include "titan/parallel.hpp"
#include "titan/prox.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace titan {

std::string to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::ridge: return "ridge";
        case BaselineKind::lasso: return "lasso";
        case BaselineKind::nmtl: return "nmtl";
    }
    return "unknown";
}

BaselineKind baseline_kind_from_string(const std::string& name) {
    if (name == "ridge") return BaselineKind::ridge;
    if (name == "lasso") return BaselineKind::lasso;
    if (name == "nmtl") return BaselineKind::nmtl;
    throw InputError("unknown baseline kind: " + name);
}

Vector fit_ridge(const TaskDataset& task, double lambda) {
    if (!(lambda > 0.0)) throw InputError("ridge needs lambda > 0");
    const double n = static_cast<double>(task.n());
    Matrix A = (2.0 / n) * task.X.transpose() * task.X;
    A.diagonal().array() += 2.0 * lambda;
    const Vector rhs = (2.0 / n) * task.X.transpose() * task.Y;
    return A.llt().solve(rhs);
}

double lasso_objective(const TaskDataset& task, const Vector& w, double lambda) {
    return (task.X * w - task.Y).squaredNorm() / static_cast<double>(task.n()) +
           lambda * w.lpNorm<1>();
}

double nmtl_objective(const MultiTaskDataset& data, const Matrix& W, double lambda) {
    double loss = 0.0;
    for (std::size_t r = 0; r < data.num_tasks(); ++r) {
        const auto& task = data.tasks[r];
        loss += (task.X * W.col(static_cast<Index>(r)) - task.Y).squaredNorm() /
                static_cast<double>(task.n());
    }
    return loss + lambda * norm_l21(W);
}

namespace {

double top_eigenvalue(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

// Monotone FISTA: the reported iterate never increases the objective.
ProxGradResult monotone_fista(Matrix x, double lipschitz,
                              const std::function<Matrix(const Matrix&)>& smooth_grad,
                              const std::function<Matrix(const Matrix&, double)>& prox,
                              const std::function<double(const Matrix&)>& objective_fn,
                              const ProxGradOptions& opts) {
    ProxGradResult out;
    if (lipschitz <= 0.0) lipschitz = 1.0;
    const double step = 1.0 / lipschitz;
    Matrix y = x;
    double t = 1.0;
    double fx = objective_fn(x);
    for (int it = 1; it <= opts.max_iter; ++it) {
        const Matrix z = prox(y - step * smooth_grad(y), step);
        const double fz = objective_fn(z);
        const double change = (z - x).cwiseAbs().maxCoeff();
        const Matrix x_prev = x;
        if (fz <= fx) {
            x = z;
            fx = fz;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev);
        t = t_next;
        out.objective_history.push_back(fx);
        out.iterations = it;
        if (change < opts.tol) {
            out.converged = true;
            break;
        }
    }
    out.weights = std::move(x);
    return out;
}

}  // namespace

ProxGradResult fit_lasso(const TaskDataset& task, double lambda, const ProxGradOptions& opts) {
    if (!(lambda >= 0.0)) throw InputError("lasso needs lambda >= 0");
    const double n = static_cast<double>(task.n());
    const Matrix gram = task.X.transpose() * task.X / n;
    const Vector xty = task.X.transpose() * task.Y / n;
    return monotone_fista(
        Matrix::Zero(task.p(), 1), 2.0 * top_eigenvalue(gram),
        [&](const Matrix& w) -> Matrix { return 2.0 * (gram * w - xty); },
        [&](const Matrix& v, double step) { return soft_threshold(v, step * lambda); },
        [&](const Matrix& w) { return lasso_objective(task, w.col(0), lambda); }, opts);
}

ProxGradResult fit_nmtl(const MultiTaskDataset& data, double lambda, const ProxGradOptions& opts) {
    if (!(lambda >= 0.0)) throw InputError("nMTL needs lambda >= 0");
    const std::size_t T = data.num_tasks();
    std::vector<Matrix> gram(T);
    std::vector<Vector> xty(T);
    double lipschitz = 0.0;
    for (std::size_t r = 0; r < T; ++r) {
        const auto& task = data.tasks[r];
        const double n = static_cast<double>(task.n());
        gram[r] = task.X.transpose() * task.X / n;
        xty[r] = task.X.transpose() * task.Y / n;
        lipschitz = std::max(lipschitz, 2.0 * top_eigenvalue(gram[r]));
    }
    return monotone_fista(
        Matrix::Zero(data.p(), static_cast<Index>(T)), lipschitz,
        [&](const Matrix& W) {
            Matrix g(W.rows(), W.cols());
            for (std::size_t r = 0; r < T; ++r) {
                const auto c = static_cast<Index>(r);
                g.col(c) = 2.0 * (gram[r] * W.col(c) - xty[r]);
            }
            return g;
        },
        [&](const Matrix& V, double step) { return prox_l21(V, step * lambda); },
        [&](const Matrix& W) { return nmtl_objective(data, W, lambda); }, opts);
}

Vector BaselineModel::predict(const Matrix& X, const std::string& task) const {
    const auto it = std::find(tasks.begin(), tasks.end(), task);
    if (it == tasks.end()) throw InputError("unknown task: " + task);
    if (X.cols() != weights.rows()) {
        throw InputError("input has " + std::to_string(X.cols()) + " columns, model expects " +
                         std::to_string(weights.rows()));
    }
    return X * weights.col(it - tasks.begin());
}

std::vector<double> default_grid(BaselineKind kind) {
    if (kind == BaselineKind::ridge) return {10.0, 100.0};
    return {1.0, 10.0, 100.0};
}

namespace {

struct Fold {
    TaskDataset train;
    TaskDataset valid;
};

// Contiguous folds over the (already shuffled) training rows.
std::vector<Fold> make_folds(const TaskDataset& task, int folds) {
    const Index n = task.n();
    const int used = static_cast<int>(std::min<Index>(folds, n));
    std::vector<Fold> out;
    if (used < 2) return out;
    for (int f = 0; f < used; ++f) {
        const Index lo = n * f / used;
        const Index hi = n * (f + 1) / used;
        Fold fold;
        fold.train.road_id = fold.valid.road_id = task.road_id;
        fold.valid.X = task.X.middleRows(lo, hi - lo);
        fold.valid.Y = task.Y.segment(lo, hi - lo);
        fold.train.X.resize(n - (hi - lo), task.p());
        fold.train.Y.resize(n - (hi - lo));
        fold.train.X << task.X.topRows(lo), task.X.bottomRows(n - hi);
        fold.train.Y << task.Y.head(lo), task.Y.tail(n - hi);
        out.push_back(std::move(fold));
    }
    return out;
}

Vector fit_single(BaselineKind kind, const TaskDataset& task, double lambda) {
    if (kind == BaselineKind::ridge) return fit_ridge(task, lambda);
    return fit_lasso(task, lambda).weights.col(0);
}

}  // namespace

BaselineModel train_baseline(BaselineKind kind, const MultiTaskDataset& train,
                             const std::vector<double>& grid, int folds) {
    if (grid.empty()) throw InputError("empty penalty grid");
    train.validate();
    const std::size_t T = train.num_tasks();
    BaselineModel model;
    model.kind = kind;
    model.tasks = train.graph.tasks;
    model.weights = Matrix::Zero(train.p(), static_cast<Index>(T));
    model.lambda.assign(T, grid.front());

    if (kind == BaselineKind::nmtl) {
        std::vector<std::vector<Fold>> per_task(T);
        int used = folds;
        for (std::size_t r = 0; r < T; ++r) {
            per_task[r] = make_folds(train.tasks[r], folds);
            used = std::min<int>(used, static_cast<int>(per_task[r].size()));
        }
        double best = std::numeric_limits<double>::infinity();
        double best_lambda = grid.front();
        for (double lambda : grid) {
            double err = 0.0;
            for (int f = 0; f < used; ++f) {
                MultiTaskDataset part;
                part.graph = train.graph;
                for (std::size_t r = 0; r < T; ++r) part.tasks.push_back(per_task[r][f].train);
                const Matrix W = fit_nmtl(part, lambda).weights;
                for (std::size_t r = 0; r < T; ++r) {
                    const auto& v = per_task[r][f].valid;
                    err += (v.X * W.col(static_cast<Index>(r)) - v.Y).squaredNorm() /
                           static_cast<double>(v.n());
                }
            }
            if (err < best) {
                best = err;
                best_lambda = lambda;
            }
        }
        model.weights = fit_nmtl(train, best_lambda).weights;
        model.lambda.assign(T, best_lambda);
        return model;
    }

    parallel_for(T, [&](std::size_t r) {
        const auto& task = train.tasks[r];
        const auto task_folds = make_folds(task, folds);
        double best = std::numeric_limits<double>::infinity();
        double best_lambda = grid.front();
        for (double lambda : grid) {
            double err = 0.0;
            for (const auto& fold : task_folds) {
                const Vector w = fit_single(kind, fold.train, lambda);
                err += (fold.valid.X * w - fold.valid.Y).squaredNorm() /
                       static_cast<double>(fold.valid.n());
            }
            if (err < best) {
                best = err;
                best_lambda = lambda;
            }
        }
        model.weights.col(static_cast<Index>(r)) = fit_single(kind, task, best_lambda);
        model.lambda[r] = best_lambda;
    });
    return model;
}

}  // namespace titan
