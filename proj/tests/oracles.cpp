#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

double prox_abs(double x, double kappa) {
    const double span = std::abs(x) + 1.0;
    return golden_min([&](double u) { return 0.5 * (u - x) * (u - x) + kappa * std::abs(u); }, -span, span);
}

double prox_abs_nonneg(double x, double kappa) {
    const double span = std::abs(x) + 1.0;
    return golden_min([&](double u) { return 0.5 * (u - x) * (u - x) + kappa * u; }, 0.0, span);
}

Vector prox_group(const Vector& v, double kappa) {
    double norm = 0.0;
    for (Index i = 0; i < v.size(); ++i) norm += v(i) * v(i);
    norm = std::sqrt(norm);
    if (norm == 0.0) return Vector::Zero(v.size());
    // Any component orthogonal to v raises both terms, so the minimizer is t * v / |v|, t >= 0.
    const double t = golden_min([&](double s) { return 0.5 * (s - norm) * (s - norm) + kappa * std::abs(s); },
                                0.0, norm + 1.0);
    return (t / norm) * v;
}

double sum_abs(const Matrix& m) {
    double s = 0.0;
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) s += std::abs(m(i, j));
    return s;
}

double sum_row_norms(const Matrix& m) {
    double s = 0.0;
    for (Index i = 0; i < m.rows(); ++i) {
        double r = 0.0;
        for (Index j = 0; j < m.cols(); ++j) r += m(i, j) * m(i, j);
        s += std::sqrt(r);
    }
    return s;
}

namespace {

double edge_lambda(const titan::Hyperparams& hp, const std::string& a, const std::string& b) {
    const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    const auto it = hp.edge_lambda.find(key);
    return it == hp.edge_lambda.end() ? hp.lambda_conn : it->second;
}

double task_loss(const titan::TaskDataset& task, const Matrix& Q, const Matrix& W, Index r) {
    const Index n = task.X.rows(), p = task.X.cols(), k = Q.cols();
    double loss = 0.0;
    for (Index i = 0; i < n; ++i) {
        double pred = 0.0;
        for (Index a = 0; a < p; ++a)
            for (Index b = 0; b < k; ++b) pred += task.X(i, a) * Q(a, b) * W(b, r);
        loss += (pred - task.Y(i)) * (pred - task.Y(i));
    }
    return loss / static_cast<double>(n);
}

double connectivity(const titan::MultiTaskDataset& data, const Matrix& W, const titan::Hyperparams& hp) {
    const auto T = data.graph.size();
    double total = 0.0;
    for (std::size_t i = 0; i < T; ++i) {
        for (std::size_t j = 0; j < T; ++j) {
            if (data.graph.adjacency(static_cast<Index>(i), static_cast<Index>(j)) == 0.0) continue;
            double d = 0.0;
            for (Index a = 0; a < W.rows(); ++a) {
                const double diff = W(a, static_cast<Index>(i)) - W(a, static_cast<Index>(j));
                d += diff * diff;
            }
            total += 0.5 * edge_lambda(hp, data.graph.tasks[i], data.graph.tasks[j]) * d;
        }
    }
    return total;
}

double frob_inner(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) s += a(i, j) * b(i, j);
    return s;
}

}  // namespace

double objective(const titan::MultiTaskDataset& data, const Matrix& Q, const Matrix& W,
                 const titan::Hyperparams& hp) {
    double total = 0.0;
    for (std::size_t r = 0; r < data.tasks.size(); ++r) total += task_loss(data.tasks[r], Q, W, static_cast<Index>(r));
    return total + hp.lambda_w * sum_row_norms(W) + hp.lambda_q * sum_abs(Q) + connectivity(data, W, hp);
}

double smooth_lagrangian(const titan::MultiTaskDataset& data, const titan::SolverState& s,
                         const titan::Hyperparams& hp) {
    double total = 0.0;
    for (std::size_t r = 0; r < data.tasks.size(); ++r) total += task_loss(data.tasks[r], s.Q, s.W, static_cast<Index>(r));
    total += connectivity(data, s.W, hp);
    const Matrix dW = s.W - s.U_W;
    const Matrix dQ = s.Q - s.U_Q;
    total += frob_inner(s.Lambda1, dW) + frob_inner(s.Lambda2, dQ);
    total += 0.5 * hp.rho * (frob_inner(dW, dW) + frob_inner(dQ, dQ));
    if (hp.orthogonality) {
        const Index k = s.Q.cols();
        Matrix G = naive_product(s.Q.transpose(), s.Q);
        for (Index i = 0; i < k; ++i) G(i, i) -= 1.0;
        total += frob_inner(s.Lambda3, G) + 0.5 * hp.rho * frob_inner(G, G);
    }
    return total;
}

Vector fd_grad_W(const titan::MultiTaskDataset& data, titan::SolverState s, const titan::Hyperparams& hp,
                 std::size_t r, double h) {
    const auto c = static_cast<Index>(r);
    Vector g(s.W.rows());
    for (Index i = 0; i < s.W.rows(); ++i) {
        const double w0 = s.W(i, c);
        s.W(i, c) = w0 + h;
        const double up = smooth_lagrangian(data, s, hp);
        s.W(i, c) = w0 - h;
        const double down = smooth_lagrangian(data, s, hp);
        s.W(i, c) = w0;
        g(i) = (up - down) / (2.0 * h);
    }
    return g;
}

Matrix fd_grad_Q(const titan::MultiTaskDataset& data, titan::SolverState s, const titan::Hyperparams& hp,
                 double h) {
    Matrix g(s.Q.rows(), s.Q.cols());
    for (Index i = 0; i < s.Q.rows(); ++i) {
        for (Index j = 0; j < s.Q.cols(); ++j) {
            const double q0 = s.Q(i, j);
            s.Q(i, j) = q0 + h;
            const double up = smooth_lagrangian(data, s, hp);
            s.Q(i, j) = q0 - h;
            const double down = smooth_lagrangian(data, s, hp);
            s.Q(i, j) = q0;
            g(i, j) = (up - down) / (2.0 * h);
        }
    }
    return g;
}

double rmse(const Vector& y, const Vector& yhat) {
    double mean = 0.0;
    for (Index i = 0; i < y.size(); ++i) mean += (y(i) - yhat(i)) * (y(i) - yhat(i));
    return std::sqrt(mean / static_cast<double>(y.size()));
}

double mae(const Vector& y, const Vector& yhat) {
    double s = 0.0;
    for (Index i = 0; i < y.size(); ++i) s += std::abs(y(i) - yhat(i));
    return s / static_cast<double>(y.size());
}

double mape(const Vector& y, const Vector& yhat) {
    double s = 0.0;
    for (Index i = 0; i < y.size(); ++i) s += std::abs((y(i) - yhat(i)) / y(i));
    return 100.0 * s / static_cast<double>(y.size());
}

Matrix naive_product(const Matrix& a, const Matrix& b) {
    Matrix c = Matrix::Zero(a.rows(), b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < b.cols(); ++j)
            for (Index l = 0; l < a.cols(); ++l) c(i, j) += a(i, l) * b(l, j);
    return c;
}

Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

Instance random_instance(std::mt19937_64& rng, int T, int p, int k, int n) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::string> names;
    for (int r = 0; r < T; ++r) names.push_back("r" + std::to_string(r));
    Matrix adj = Matrix::Zero(T, T);
    for (int i = 0; i < T; ++i)
        for (int j = i + 1; j < T; ++j)
            if (unit(rng) < 0.6) adj(i, j) = adj(j, i) = 1.0;

    Instance inst;
    inst.data.graph = titan::TaskGraph::from_adjacency(names, adj);
    for (int r = 0; r < T; ++r) {
        titan::TaskDataset task;
        task.road_id = names[static_cast<std::size_t>(r)];
        task.X = random_matrix(rng, n, p);
        task.Y = random_matrix(rng, n, 1, 3.0);
        inst.data.tasks.push_back(std::move(task));
    }
    inst.hp.k = k;
    inst.hp.rho = 0.5 + 2.0 * unit(rng);
    inst.hp.lambda_conn = unit(rng);
    inst.hp.lambda_w = unit(rng);
    inst.hp.lambda_q = unit(rng);
    if (T >= 2 && adj(0, 1) != 0.0) inst.hp.edge_lambda[{names[0], names[1]}] = 2.0 * unit(rng);

    auto& s = inst.state;
    s.W = random_matrix(rng, k, T);
    s.Q = random_matrix(rng, p, k, 0.5).cwiseAbs();
    s.U_W = random_matrix(rng, k, T);
    s.U_Q = random_matrix(rng, p, k, 0.5);
    s.Lambda1 = random_matrix(rng, k, T);
    s.Lambda2 = random_matrix(rng, p, k);
    const Matrix L3 = random_matrix(rng, k, k);
    s.Lambda3 = 0.5 * (L3 + L3.transpose());
    return inst;
}

}  // namespace oracle
