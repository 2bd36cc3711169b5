#include "titan/prox.hpp"

#include <cmath>

namespace titan {

double norm_l1(const Matrix& m) { return m.cwiseAbs().sum(); }

double norm_l21(const Matrix& m) {
    double total = 0.0;
    for (Index i = 0; i < m.rows(); ++i) total += m.row(i).norm();
    return total;
}

double norm_fro(const Matrix& m) { return m.norm(); }

Matrix soft_threshold(const Matrix& m, double kappa) {
    if (kappa < 0.0) throw std::invalid_argument("soft_threshold: negative threshold");
    return m.unaryExpr([kappa](double x) {
        const double mag = std::abs(x) - kappa;
        return mag > 0.0 ? std::copysign(mag, x) : 0.0;
    });
}

Matrix soft_threshold_nonneg(const Matrix& m, double kappa) {
    if (kappa < 0.0) throw std::invalid_argument("soft_threshold_nonneg: negative threshold");
    return m.unaryExpr([kappa](double x) { return x > kappa ? x - kappa : 0.0; });
}

Matrix prox_l21(const Matrix& m, double kappa) {
    if (kappa < 0.0) throw std::invalid_argument("prox_l21: negative threshold");
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    for (Index i = 0; i < m.rows(); ++i) {
        const double norm = m.row(i).norm();
        if (norm > kappa) out.row(i) = (1.0 - kappa / norm) * m.row(i);
    }
    return out;
}

Matrix clip_nonneg(const Matrix& m) { return m.cwiseMax(0.0); }

}  // namespace titan
