#pragma once

#include "titan/baselines.hpp"
#include "titan/features.hpp"
#include "titan/solver.hpp"
#include "titan/synth.hpp"

#include "json.hpp"

#include <optional>
#include <string>

namespace titan {

using Json = nlohmann::ordered_json;

// Numeric CSV: comma-separated rows, no header. Values are written with 17
// significant digits; parse errors carry "<path>:<line>".
void write_matrix_csv(const std::string& path, const Matrix& M);
Matrix read_matrix_csv(const std::string& path);
void write_vector_csv(const std::string& path, const Vector& v);
Vector read_vector_csv(const std::string& path);

/// Dataset directory: tasks.json, graph.edges, train/ and test/ holding
/// X_<road>.csv and Y_<road>.csv, plus ground_truth.json for synthetic data.
struct StoredDataset {
    MultiTaskDataset train;
    MultiTaskDataset test;
    std::optional<GroundTruth> truth;
};

void write_dataset(const std::string& dir, const StoredDataset& data);
StoredDataset read_dataset(const std::string& dir);

Json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const Json& j, const std::string& what);

// Configuration objects. Unknown keys and type errors raise InputError; missing
// keys keep their defaults.
Json hyperparams_to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const Json& j);
Json synth_config_to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const Json& j);

Json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const Json& j);
/// Same schema with a `kind` tag; Q is omitted (identity) so k = p and W is p x T.
Json baseline_to_json(const BaselineModel& model);
BaselineModel baseline_from_json(const Json& j);

/// A model file of any kind.
struct AnyModel {
    std::string kind;  // "titan", "ridge", "lasso" or "nmtl"
    std::optional<TrainedModel> titan;
    std::optional<BaselineModel> baseline;

    const std::vector<std::string>& tasks() const;
    Index p() const;
    int k() const;  // 0 for baselines
    Vector predict(const Matrix& X, const std::string& task) const;
};

AnyModel any_model_from_json(const Json& j);

Json read_json(const std::string& path);
/// Two-space indented dump followed by a newline.
void write_json(const std::string& path, const Json& j);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace titan
