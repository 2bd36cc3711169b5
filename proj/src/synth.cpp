#include "titan/synth.hpp"

#include <cmath>
#include <cstdio>

namespace titan {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // splitmix64 finalizer over (base, stream)
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void SynthConfig::validate() const {
    if (graph_kind != GraphKind::custom && T < 2) throw InputError("synthetic config needs T >= 2");
    if (p < 1 || k < 1) throw InputError("p and k must be positive");
    if (k > p) throw InputError("k must satisfy k <= p");
    if (p % k != 0) {
        throw InputError("k must divide p (k = " + std::to_string(k) + ", p = " + std::to_string(p) + ")");
    }
    if (n_per_task < 2) throw InputError("n_per_task must be at least 2");
    if (!(noise_sigma >= 0.0)) throw InputError("noise_sigma must be nonnegative");
    if (!(weight_smoothness > 0.0)) throw InputError("weight_smoothness must be positive");
    if (!(feature_corr >= 0.0 && feature_corr < 1.0)) throw InputError("feature_corr must lie in [0, 1)");
    if (!(split > 0.0 && split < 1.0)) throw InputError("split must lie in (0, 1)");
    for (const auto& [road, fraction] : split_overrides) {
        if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("split override for " + road + " must lie in (0, 1)");
    }
    if (graph_kind == GraphKind::custom && edge_list.empty()) {
        throw InputError("graph kind 'custom' needs an edge_list path");
    }
}

Matrix plant_Q(Index p, Index k, std::uint64_t seed) {
    if (k < 1 || p % k != 0) {
        throw InputError("k must divide p (k = " + std::to_string(k) + ", p = " + std::to_string(p) + ")");
    }
    const Index block = p / k;
    std::mt19937_64 engine(seed);
    std::uniform_real_distribution<double> magnitude(0.5, 1.5);
    Matrix Q = Matrix::Zero(p, k);
    for (Index j = 0; j < k; ++j) {
        for (Index i = j * block; i < (j + 1) * block; ++i) Q(i, j) = magnitude(engine);
        Q.col(j).normalize();
    }
    return Q;
}

Matrix plant_W(const TaskGraph& graph, Index k, double smoothness, std::uint64_t seed) {
    if (!(smoothness > 0.0)) throw InputError("weight smoothness must be positive");
    const auto T = static_cast<Index>(graph.size());
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Vector w0(k);
    for (Index i = 0; i < k; ++i) w0(i) = normal(engine);
    Matrix zeta(k, T);
    const double sd = 1.0 / std::sqrt(smoothness);
    for (Index r = 0; r < T; ++r) {
        for (Index i = 0; i < k; ++i) zeta(i, r) = sd * normal(engine);
    }
    Matrix W(k, T);
    for (Index r = 0; r < T; ++r) {
        Vector xi = zeta.col(r);
        for (Index j = 0; j < T; ++j) {
            if (graph.adjacency(r, j) != 0.0) xi += zeta.col(j);
        }
        W.col(r) = w0 + xi / (1.0 + graph.degree[static_cast<std::size_t>(r)]);
    }
    return W;
}

TaskGraph synth_graph(const SynthConfig& config) {
    if (config.graph_kind == GraphKind::custom) {
        return build_line_graph(read_edge_list(config.edge_list));
    }
    const Index T = config.T;
    std::vector<std::string> tasks;
    for (Index r = 0; r < T; ++r) {
        char name[32];
        std::snprintf(name, sizeof name, "road_%02d", static_cast<int>(r));
        tasks.emplace_back(name);
    }
    Matrix adj = Matrix::Zero(T, T);
    switch (config.graph_kind) {
        case GraphKind::star:
            for (Index r = 1; r < T; ++r) adj(0, r) = adj(r, 0) = 1.0;
            break;
        case GraphKind::path:
            for (Index r = 0; r + 1 < T; ++r) adj(r, r + 1) = adj(r + 1, r) = 1.0;
            break;
        case GraphKind::complete:
            adj.setOnes();
            adj.diagonal().setZero();
            break;
        case GraphKind::custom:
            break;
    }
    return TaskGraph::from_adjacency(std::move(tasks), std::move(adj));
}

Matrix ar1_design(Index n, Index p, double corr, std::mt19937_64& engine) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double innovation = std::sqrt(1.0 - corr * corr);
    Matrix X(n, p);
    for (Index i = 0; i < n; ++i) {
        X(i, 0) = normal(engine);
        for (Index j = 1; j < p; ++j) X(i, j) = corr * X(i, j - 1) + innovation * normal(engine);
    }
    return X;
}

SynthData generate_from_truth(const SynthConfig& config, const TaskGraph& graph,
                              const GroundTruth& truth) {
    const auto T = static_cast<Index>(graph.size());
    if (truth.Q.rows() != config.p || truth.W.cols() != T || truth.W.rows() != truth.Q.cols()) {
        throw InputError("ground truth shapes do not match the configuration");
    }
    SynthData out;
    out.truth = truth;
    out.train.graph = out.test.graph = graph;
    out.train.h = out.test.h = config.p / 2;
    out.train.t = out.test.t = config.p - config.p / 2;

    for (const auto& [road, fraction] : config.split_overrides) graph.index_of(road);
    const Index n = config.n_per_task;
    for (Index r = 0; r < T; ++r) {
        const auto override_it = config.split_overrides.find(graph.tasks[static_cast<std::size_t>(r)]);
        const double split = override_it == config.split_overrides.end() ? config.split : override_it->second;
        const Index n_train = std::max<Index>(1, static_cast<Index>(std::floor(split * n)));
        std::mt19937_64 engine(derive_seed(config.seed, 100 + static_cast<std::uint64_t>(r)));
        const Matrix X = ar1_design(n, config.p, config.feature_corr, engine);
        std::normal_distribution<double> noise(0.0, 1.0);
        Vector Y = X * (truth.Q * truth.W.col(r));
        for (Index i = 0; i < n; ++i) Y(i) += config.noise_sigma * noise(engine);

        const auto perm = seeded_permutation(n, derive_seed(config.seed, 3 + 1000 * static_cast<std::uint64_t>(r)));
        TaskDataset train, test;
        train.road_id = test.road_id = graph.tasks[static_cast<std::size_t>(r)];
        train.X.resize(n_train, config.p);
        train.Y.resize(n_train);
        test.X.resize(n - n_train, config.p);
        test.Y.resize(n - n_train);
        for (Index i = 0; i < n; ++i) {
            const Index src = perm[static_cast<std::size_t>(i)];
            if (i < n_train) {
                train.X.row(i) = X.row(src);
                train.Y(i) = Y(src);
            } else {
                test.X.row(i - n_train) = X.row(src);
                test.Y(i - n_train) = Y(src);
            }
        }
        out.train.tasks.push_back(std::move(train));
        out.test.tasks.push_back(std::move(test));
    }
    return out;
}

SynthData generate(const SynthConfig& config) {
    config.validate();
    const TaskGraph graph = synth_graph(config);
    if (graph.size() < 2) throw InputError("synthetic data needs at least two tasks");
    GroundTruth truth;
    truth.Q = plant_Q(config.p, config.k, derive_seed(config.seed, 1));
    truth.W = plant_W(graph, config.k, config.weight_smoothness, derive_seed(config.seed, 2));
    const Index block = config.p / config.k;
    for (Index j = 0; j < config.k; ++j) {
        std::vector<Index> members;
        for (Index i = j * block; i < (j + 1) * block; ++i) members.push_back(i);
        truth.blocks.push_back(std::move(members));
    }
    SynthConfig effective = config;
    effective.T = static_cast<int>(graph.size());
    return generate_from_truth(effective, graph, truth);
}

}  // namespace titan
