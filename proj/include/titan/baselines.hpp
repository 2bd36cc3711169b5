#pragma once

#include "titan/common.hpp"
#include "titan/features.hpp"

#include <string>
#include <vector>

namespace titan {

enum class BaselineKind { ridge, lasso, nmtl };

std::string to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& name);

/// Stopping rule shared by lasso and nMTL.
struct ProxGradOptions {
    double tol = 1e-8;  // successive-iterate l-infinity change
    int max_iter = 10000;
};

/// Weights plus the objective value after every accepted iteration.
struct ProxGradResult {
    Matrix weights;  // p x 1 for lasso, p x T for nMTL
    std::vector<double> objective_history;
    int iterations = 0;
    bool converged = false;
};

/// argmin ||X w - Y||^2 / n + lambda ||w||^2, lambda > 0.
Vector fit_ridge(const TaskDataset& task, double lambda);

/// argmin ||X w - Y||^2 / n + lambda ||w||_1 by monotone FISTA.
ProxGradResult fit_lasso(const TaskDataset& task, double lambda, const ProxGradOptions& opts = {});

/// argmin sum_r ||X_r W_r - Y_r||^2 / n_r + lambda ||W||_{2,1} by monotone FISTA.
ProxGradResult fit_nmtl(const MultiTaskDataset& data, double lambda, const ProxGradOptions& opts = {});

double lasso_objective(const TaskDataset& task, const Vector& w, double lambda);
double nmtl_objective(const MultiTaskDataset& data, const Matrix& W, double lambda);

/// A trained reference model: column r of `weights` predicts task r.
struct BaselineModel {
    BaselineKind kind = BaselineKind::ridge;
    Matrix weights;  // p x T
    std::vector<std::string> tasks;
    std::vector<double> lambda;  // per task (nMTL repeats its single value)

    Vector predict(const Matrix& X, const std::string& task) const;
};

/// Penalty grids used for model selection: ridge {10, 100}, lasso and nMTL {1, 10, 100}.
std::vector<double> default_grid(BaselineKind kind);

/// Picks lambda from `grid` by k-fold cross-validation on the training rows
/// (per task for ridge/lasso, pooled for nMTL; ties go to the smaller lambda),
/// then refits on all training rows.
BaselineModel train_baseline(BaselineKind kind, const MultiTaskDataset& train,
                             const std::vector<double>& grid, int folds = 5);

}  // namespace titan
