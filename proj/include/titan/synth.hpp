#pragma once

#include "titan/common.hpp"
#include "titan/features.hpp"
#include "titan/roadnet.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace titan {

enum class GraphKind { star, path, complete, custom };

struct SynthConfig {
    int T = 6;
    int p = 60;
    int k = 5;
    int n_per_task = 200;
    double noise_sigma = 2.0;
    GraphKind graph_kind = GraphKind::star;
    std::string edge_list;  // road network edge list, used when graph_kind == custom
    double weight_smoothness = 0.1;
    double feature_corr = 0.5;
    double split = 0.8;
    /// Per-road train fraction replacing `split` (e.g. a data-scarce hub road).
    std::map<std::string, double> split_overrides;
    std::uint64_t seed = 7;

    void validate() const;
};

/// Planted parameters. blocks[i] lists the feature indices carried by column i of Q.
struct GroundTruth {
    Matrix Q;
    Matrix W;
    std::vector<std::vector<Index>> blocks;
};

struct SynthData {
    MultiTaskDataset train;
    MultiTaskDataset test;
    GroundTruth truth;
};

/// k contiguous equal blocks; column i is positive on block i and unit length.
Matrix plant_Q(Index p, Index k, std::uint64_t seed);

/// Column r = w0 + neighbourhood average of N(0, I/smoothness) perturbations.
Matrix plant_W(const TaskGraph& graph, Index k, double smoothness, std::uint64_t seed);

/// Task graph named road_00, road_01, ...; for `star`, road_00 is the hub.
TaskGraph synth_graph(const SynthConfig& config);

/// n x p Gaussian rows with AR(1) correlation `corr` between adjacent columns.
Matrix ar1_design(Index n, Index p, double corr, std::mt19937_64& engine);

SynthData generate(const SynthConfig& config);

/// Same sampling of X, noise and split as `generate`, but with caller-supplied truth.
SynthData generate_from_truth(const SynthConfig& config, const TaskGraph& graph,
                              const GroundTruth& truth);

/// Independent stream seed derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace titan
