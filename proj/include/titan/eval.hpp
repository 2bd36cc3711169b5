#pragma once

#include "titan/common.hpp"
#include "titan/features.hpp"
#include "titan/solver.hpp"

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace titan {

double rmse(const Vector& y, const Vector& yhat);
double mae(const Vector& y, const Vector& yhat);
/// Mean absolute percentage error, in percent. Throws InputError on a zero label.
double mape(const Vector& y, const Vector& yhat);

struct Metrics {
    double rmse = 0.0;
    double mae = 0.0;
    double mape_percent = 0.0;

    bool operator==(const Metrics&) const = default;
};

Metrics compute_metrics(const Vector& y, const Vector& yhat);

/// Test metrics of one method. `k` is the group count (0 for baselines).
struct MetricsReport {
    std::string method;
    int k = 0;
    std::map<std::string, Metrics> per_task;
    Metrics overall;  // all tasks' test pairs pooled

    bool operator==(const MetricsReport&) const = default;
};

using Predictor = std::function<Vector(const Matrix& X, const std::string& task)>;

/// Scores `predict` on every task of `test`; tasks with no test rows are skipped.
MetricsReport evaluate(const std::string& method, int k, const MultiTaskDataset& test,
                       const Predictor& predict);
MetricsReport evaluate(const TrainedModel& model, const MultiTaskDataset& test,
                       const std::string& method = "titan");

/// Task name used for pooled rows in report CSVs.
inline const std::string pooled_task = "*";

/// `method,task,k,rmse,mae,mape_percent` with 4 decimals, one row per (method, task, k).
/// With `include_overall` each report also gets a pooled row named `pooled_task`.
std::string emit_report_csv(const std::vector<MetricsReport>& reports, bool include_overall = false);

/// Inverse of emit_report_csv; reports are returned in order of first appearance.
/// `source` prefixes error messages ("<source>:<line>: ...").
std::vector<MetricsReport> parse_report_csv(const std::string& text, const std::string& source = "report");

struct TopGroup {
    int group = 0;
    Vector q;
};

/// For each task, the group with the largest |W(i, r)| (lowest index on ties) and its Q column.
std::map<std::string, TopGroup> top_group_per_task(const TrainedModel& model);

/// Indices i with |v(i)| > rel * max|v|; empty for a zero vector.
std::set<Index> support(const Vector& v, double rel = 0.1);

double jaccard(const std::set<Index>& a, const std::set<Index>& b);

/// Mean over planted blocks of the best Jaccard against any learned column support.
double block_support_jaccard(const Matrix& Q, const std::vector<std::vector<Index>>& blocks,
                             double rel = 0.1);

/// k x k support Jaccard between distinct columns (zero diagonal).
Matrix pairwise_support_overlap(const Matrix& Q, double rel = 0.1);

/// Trains one model per k (shared seed, concurrent) and reports test metrics in k order.
/// Every k must satisfy 1 <= k <= p; errors name the offending k.
std::vector<MetricsReport> sweep_group_count(const MultiTaskDataset& train,
                                             const MultiTaskDataset& test,
                                             const Hyperparams& hp_base,
                                             const std::vector<int>& k_values);

}  // namespace titan
