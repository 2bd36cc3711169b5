#pragma once

// Reference computations written independently of the library kernels: plain
// loops, numeric 1-D minimization and finite differences.

#include "titan/features.hpp"
#include "titan/solver.hpp"

#include <functional>
#include <random>

namespace oracle {

using titan::Index;
using titan::Matrix;
using titan::Vector;

/// Golden-section minimizer of a convex 1-D function on [lo, hi].
double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12);

/// argmin_u 1/2 (u - x)^2 + kappa |u|, found numerically.
double prox_abs(double x, double kappa);
/// argmin_{u >= 0} 1/2 (u - x)^2 + kappa u, found numerically.
double prox_abs_nonneg(double x, double kappa);
/// argmin_u 1/2 ||u - v||^2 + kappa ||u||_2 by a line search along v.
Vector prox_group(const Vector& v, double kappa);

double sum_abs(const Matrix& m);
double sum_row_norms(const Matrix& m);

/// Eq-by-eq loop evaluation of the training objective.
double objective(const titan::MultiTaskDataset& data, const Matrix& Q, const Matrix& W,
                 const titan::Hyperparams& hp);

/// Smooth part of the augmented Lagrangian, evaluated from raw X and Y.
double smooth_lagrangian(const titan::MultiTaskDataset& data, const titan::SolverState& s,
                         const titan::Hyperparams& hp);

/// Central finite differences of smooth_lagrangian in W(:, r) and in Q.
Vector fd_grad_W(const titan::MultiTaskDataset& data, titan::SolverState s, const titan::Hyperparams& hp,
                 std::size_t r, double h = 1e-5);
Matrix fd_grad_Q(const titan::MultiTaskDataset& data, titan::SolverState s, const titan::Hyperparams& hp,
                 double h = 1e-5);

double rmse(const Vector& y, const Vector& yhat);
double mae(const Vector& y, const Vector& yhat);
double mape(const Vector& y, const Vector& yhat);

Matrix naive_product(const Matrix& a, const Matrix& b);

/// Random instance for gradient checks: T tasks on a random graph, random
/// state with symmetric Lambda3.
struct Instance {
    titan::MultiTaskDataset data;
    titan::Hyperparams hp;
    titan::SolverState state;
};
Instance random_instance(std::mt19937_64& rng, int T, int p, int k, int n);

Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0);

}  // namespace oracle
