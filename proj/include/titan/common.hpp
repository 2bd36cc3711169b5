#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace titan {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Bad input data, configuration or file contents. The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// A non-finite value or failed factorization during training. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Number of worker threads allowed by TITAN_THREADS (default: hardware concurrency, min 1).
std::size_t thread_budget();

}  // namespace titan
