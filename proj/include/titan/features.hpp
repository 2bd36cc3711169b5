#pragma once

#include "titan/common.hpp"
#include "titan/roadnet.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace titan {

/// Per-minute speed readings of one sensor; readings[0] sits at interval `start_index`.
struct SpeedSeries {
    std::string sensor_id;
    std::vector<double> readings;
    long start_index = 0;

    void validate() const;
};

struct IncidentRecord {
    std::string incident_id;
    std::string road_id;
    long verification_index = 0;
    double duration_minutes = 0.0;
};

/// Design matrix and duration labels for one road.
struct TaskDataset {
    std::string road_id;
    Matrix X;
    Vector Y;

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }

    /// `allow_empty` lets a test split hold zero rows.
    void validate(bool allow_empty = false) const;
};

struct MultiTaskDataset {
    std::vector<TaskDataset> tasks;
    TaskGraph graph;
    int h = 0;
    int t = 0;

    std::size_t num_tasks() const { return tasks.size(); }
    Index p() const { return tasks.empty() ? 0 : tasks.front().p(); }
    Index total_rows() const;

    void validate(bool allow_empty_tasks = false) const;
};

/// Detection window (h readings before `verification_index`) followed by the
/// early-verification window (t readings from `verification_index` on), oldest first.
Vector construct_features(const SpeedSeries& series, long verification_index, int h, int t);

struct SplitDatasets {
    MultiTaskDataset train;
    MultiTaskDataset test;
    /// Incident ids dropped because their window is not covered by the series.
    std::vector<std::string> excluded;
};

/// Builds per-road feature rows and splits each road independently with a seeded
/// shuffle: floor(split * n_r) rows (at least one) go to train, the rest to test.
SplitDatasets assemble_dataset(const std::vector<IncidentRecord>& incidents,
                               const std::map<std::string, SpeedSeries>& series_by_road,
                               const TaskGraph& graph, int h, int t, double split,
                               std::uint64_t seed);

/// Per-column affine standardization fitted on training rows pooled over tasks.
struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const MultiTaskDataset& train);
    void apply(MultiTaskDataset& data) const;
};

/// Deterministic Fisher-Yates permutation of 0..n-1.
std::vector<Index> seeded_permutation(Index n, std::uint64_t seed);

std::vector<IncidentRecord> read_incidents_csv(const std::string& path);
/// Speed file: first line `# start_index=<int>`, then one reading per line.
SpeedSeries read_speed_csv(const std::string& path, const std::string& sensor_id);

}  // namespace titan
