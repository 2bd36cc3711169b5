#pragma once

#include "titan/common.hpp"

namespace titan {

/// Sum of absolute entries.
double norm_l1(const Matrix& m);

/// Sum of row Euclidean norms. A row is one grouped feature across all tasks.
double norm_l21(const Matrix& m);

double norm_fro(const Matrix& m);

/// Entrywise sign(x) * max(|x| - kappa, 0): prox of kappa * ||.||_1.
Matrix soft_threshold(const Matrix& m, double kappa);

/// Entrywise max(x - kappa, 0): prox of kappa * ||.||_1 plus the indicator of {x >= 0}.
Matrix soft_threshold_nonneg(const Matrix& m, double kappa);

/// Row-wise group shrinkage: prox of kappa * ||.||_{2,1}.
Matrix prox_l21(const Matrix& m, double kappa);

/// Euclidean projection onto the nonnegative orthant.
Matrix clip_nonneg(const Matrix& m);

}  // namespace titan
