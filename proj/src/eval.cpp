#include "titan/eval.hpp"

#include "titan/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace titan {

namespace {

void check_pair(const Vector& y, const Vector& yhat) {
    if (y.size() == 0) throw InputError("metrics need at least one observation");
    if (y.size() != yhat.size()) {
        throw InputError("length mismatch: " + std::to_string(y.size()) + " labels, " +
                         std::to_string(yhat.size()) + " predictions");
    }
}

}  // namespace

double rmse(const Vector& y, const Vector& yhat) {
    check_pair(y, yhat);
    return std::sqrt((y - yhat).squaredNorm() / static_cast<double>(y.size()));
}

double mae(const Vector& y, const Vector& yhat) {
    check_pair(y, yhat);
    return (y - yhat).cwiseAbs().sum() / static_cast<double>(y.size());
}

double mape(const Vector& y, const Vector& yhat) {
    check_pair(y, yhat);
    double total = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
        if (y(i) == 0.0) throw InputError("MAPE is undefined for a zero label (row " + std::to_string(i) + ")");
        total += std::abs(y(i) - yhat(i)) / std::abs(y(i));
    }
    return 100.0 * total / static_cast<double>(y.size());
}

Metrics compute_metrics(const Vector& y, const Vector& yhat) {
    return {rmse(y, yhat), mae(y, yhat), mape(y, yhat)};
}

MetricsReport evaluate(const std::string& method, int k, const MultiTaskDataset& test,
                       const Predictor& predict) {
    MetricsReport report;
    report.method = method;
    report.k = k;
    std::vector<double> ys, yhats;
    for (const auto& task : test.tasks) {
        if (task.n() == 0) continue;
        const Vector yhat = predict(task.X, task.road_id);
        report.per_task[task.road_id] = compute_metrics(task.Y, yhat);
        ys.insert(ys.end(), task.Y.data(), task.Y.data() + task.Y.size());
        yhats.insert(yhats.end(), yhat.data(), yhat.data() + yhat.size());
    }
    if (ys.empty()) throw InputError("test split has no rows");
    report.overall = compute_metrics(Eigen::Map<const Vector>(ys.data(), static_cast<Index>(ys.size())),
                                     Eigen::Map<const Vector>(yhats.data(), static_cast<Index>(yhats.size())));
    return report;
}

MetricsReport evaluate(const TrainedModel& model, const MultiTaskDataset& test, const std::string& method) {
    return evaluate(method, static_cast<int>(model.k()), test,
                    [&](const Matrix& X, const std::string& task) { return predict(model, X, task); });
}

namespace {

void append_row(std::string& out, const std::string& method, const std::string& task, int k,
                const Metrics& m) {
    char buf[128];
    std::snprintf(buf, sizeof buf, ",%d,%.4f,%.4f,%.4f\n", k, m.rmse, m.mae, m.mape_percent);
    out += method + "," + task + buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

std::string emit_report_csv(const std::vector<MetricsReport>& reports, bool include_overall) {
    std::string out = "method,task,k,rmse,mae,mape_percent\n";
    for (const auto& report : reports) {
        if (report.method.find_first_of(",\n") != std::string::npos) {
            throw InputError("method label may not contain commas or newlines: " + report.method);
        }
        for (const auto& [task, m] : report.per_task) append_row(out, report.method, task, report.k, m);
        if (include_overall) append_row(out, report.method, pooled_task, report.k, report.overall);
    }
    return out;
}

std::vector<MetricsReport> parse_report_csv(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<MetricsReport> reports;
    auto fail = [&](const std::string& what) {
        throw InputError(source + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line != "method,task,k,rmse,mae,mape_percent") fail("unexpected header '" + line + "'");
            continue;
        }
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 6) fail("expected 6 fields, found " + std::to_string(cells.size()));
        int k = 0;
        Metrics m;
        try {
            std::size_t used = 0;
            k = std::stoi(cells[2], &used);
            if (used != cells[2].size()) fail("bad k '" + cells[2] + "'");
            double* slots[3] = {&m.rmse, &m.mae, &m.mape_percent};
            for (int c = 0; c < 3; ++c) {
                *slots[c] = std::stod(cells[3 + c], &used);
                if (used != cells[3 + c].size()) fail("bad number '" + cells[3 + c] + "'");
            }
        } catch (const std::logic_error&) {
            fail("bad numeric field");
        }
        auto it = std::find_if(reports.begin(), reports.end(), [&](const MetricsReport& r) {
            return r.method == cells[0] && r.k == k;
        });
        if (it == reports.end()) {
            reports.push_back({cells[0], k, {}, {}});
            it = reports.end() - 1;
        }
        if (cells[1] == pooled_task) {
            it->overall = m;
        } else {
            if (it->per_task.count(cells[1])) fail("duplicate row for task " + cells[1]);
            it->per_task[cells[1]] = m;
        }
    }
    if (lineno == 0) throw InputError(source + ": empty report");
    return reports;
}

std::map<std::string, TopGroup> top_group_per_task(const TrainedModel& model) {
    std::map<std::string, TopGroup> out;
    for (std::size_t r = 0; r < model.tasks.size(); ++r) {
        const auto w = model.W.col(static_cast<Index>(r)).cwiseAbs();
        Index best = 0;
        for (Index i = 1; i < w.size(); ++i) {
            if (w(i) > w(best)) best = i;
        }
        out[model.tasks[r]] = {static_cast<int>(best), model.Q.col(best)};
    }
    return out;
}

std::set<Index> support(const Vector& v, double rel) {
    std::set<Index> s;
    const double peak = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    if (peak == 0.0) return s;
    for (Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > rel * peak) s.insert(i);
    }
    return s;
}

double jaccard(const std::set<Index>& a, const std::set<Index>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t common = 0;
    for (Index i : a) common += b.count(i);
    return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

double block_support_jaccard(const Matrix& Q, const std::vector<std::vector<Index>>& blocks, double rel) {
    if (blocks.empty()) throw InputError("no planted blocks to compare against");
    std::vector<std::set<Index>> learned;
    for (Index j = 0; j < Q.cols(); ++j) learned.push_back(support(Q.col(j), rel));
    double total = 0.0;
    for (const auto& block : blocks) {
        const std::set<Index> planted(block.begin(), block.end());
        double best = 0.0;
        for (const auto& s : learned) best = std::max(best, jaccard(planted, s));
        total += best;
    }
    return total / static_cast<double>(blocks.size());
}

Matrix pairwise_support_overlap(const Matrix& Q, double rel) {
    const Index k = Q.cols();
    std::vector<std::set<Index>> s;
    for (Index j = 0; j < k; ++j) s.push_back(support(Q.col(j), rel));
    Matrix out = Matrix::Zero(k, k);
    for (Index i = 0; i < k; ++i) {
        for (Index j = i + 1; j < k; ++j) {
            out(i, j) = out(j, i) = (s[i].empty() || s[j].empty()) ? 0.0 : jaccard(s[i], s[j]);
        }
    }
    return out;
}

std::vector<MetricsReport> sweep_group_count(const MultiTaskDataset& train,
                                             const MultiTaskDataset& test,
                                             const Hyperparams& hp_base,
                                             const std::vector<int>& k_values) {
    if (k_values.empty()) throw InputError("empty list of group counts");
    const Index p = train.p();
    for (int k : k_values) {
        if (k < 1 || k > p) {
            throw InputError("k = " + std::to_string(k) + " violates 1 <= k <= p (p = " + std::to_string(p) + ")");
        }
    }
    std::vector<MetricsReport> out(k_values.size());
    parallel_for(k_values.size(), [&](std::size_t i) {
        Hyperparams hp = hp_base;
        hp.k = k_values[i];
        const std::string where = "k = " + std::to_string(hp.k) + ": ";
        try {
            out[i] = evaluate(fit(train, hp), test);
        } catch (const NumericalError& e) {
            throw NumericalError(where + e.what());
        } catch (const InputError& e) {
            throw InputError(where + e.what());
        }
    });
    return out;
}

}  // namespace titan
