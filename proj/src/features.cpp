#include "titan/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace titan {

void SpeedSeries::validate() const {
    if (readings.empty()) throw InputError("speed series " + sensor_id + " is empty");
    for (double v : readings) {
        if (!std::isfinite(v) || v < 0.0) {
            throw InputError("speed series " + sensor_id + " has a negative or non-finite reading");
        }
    }
}

void TaskDataset::validate(bool allow_empty) const {
    if (X.rows() != Y.size()) {
        throw InputError("task " + road_id + ": X has " + std::to_string(X.rows()) +
                         " rows but Y has " + std::to_string(Y.size()) + " labels");
    }
    if (!allow_empty && X.rows() < 1) throw InputError("task " + road_id + " has no rows");
    if (!X.allFinite() || !Y.allFinite()) {
        throw InputError("task " + road_id + " contains non-finite values");
    }
}

Index MultiTaskDataset::total_rows() const {
    Index n = 0;
    for (const auto& task : tasks) n += task.n();
    return n;
}

void MultiTaskDataset::validate(bool allow_empty_tasks) const {
    if (tasks.empty()) throw InputError("dataset has no tasks");
    if (tasks.size() != graph.size()) {
        throw InputError("dataset task count does not match the task graph");
    }
    const Index dim = p();
    for (std::size_t r = 0; r < tasks.size(); ++r) {
        if (tasks[r].road_id != graph.tasks[r]) {
            throw InputError("task order differs from graph order at index " + std::to_string(r));
        }
        if (tasks[r].p() != dim) {
            throw InputError("task " + tasks[r].road_id + " has a different feature dimension");
        }
        tasks[r].validate(allow_empty_tasks);
    }
    if (h > 0 && t > 0 && h + t != dim) {
        throw InputError("feature dimension " + std::to_string(dim) + " differs from h + t");
    }
}

Vector construct_features(const SpeedSeries& series, long verification_index, int h, int t) {
    if (h < 1 || t < 1) throw InputError("window lengths h and t must be >= 1");
    const long first = verification_index - h;
    const long last = verification_index + t - 1;
    const long avail_first = series.start_index;
    const long avail_last = series.start_index + static_cast<long>(series.readings.size()) - 1;
    if (first < avail_first || last > avail_last) {
        std::ostringstream msg;
        msg << "insufficient history: need intervals [" << first << ", " << last
            << "] but series " << series.sensor_id << " covers [" << avail_first << ", "
            << avail_last << "]";
        throw InputError(msg.str());
    }
    Vector out(h + t);
    for (long i = 0; i < h + t; ++i) {
        out(i) = series.readings[static_cast<std::size_t>(first - avail_first + i)];
    }
    return out;
}

std::vector<Index> seeded_permutation(Index n, std::uint64_t seed) {
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 engine(seed);
    for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(engine() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

namespace {

TaskDataset take_rows(const std::string& road, const Matrix& X, const Vector& Y,
                      const std::vector<Index>& rows) {
    TaskDataset out;
    out.road_id = road;
    out.X.resize(static_cast<Index>(rows.size()), X.cols());
    out.Y.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Index>(i)) = X.row(rows[i]);
        out.Y(static_cast<Index>(i)) = Y(rows[i]);
    }
    return out;
}

}  // namespace

SplitDatasets assemble_dataset(const std::vector<IncidentRecord>& incidents,
                               const std::map<std::string, SpeedSeries>& series_by_road,
                               const TaskGraph& graph, int h, int t, double split,
                               std::uint64_t seed) {
    if (!(split > 0.0 && split < 1.0)) throw InputError("split must lie in (0, 1)");
    if (h < 1 || t < 1) throw InputError("window lengths h and t must be >= 1");

    std::vector<std::vector<Vector>> rows(graph.size());
    std::vector<std::vector<double>> labels(graph.size());
    SplitDatasets out;
    for (const auto& inc : incidents) {
        const std::size_t r = graph.index_of(inc.road_id);
        if (!(inc.duration_minutes > 0.0)) {
            throw InputError("incident " + inc.incident_id + " has a non-positive duration");
        }
        const auto it = series_by_road.find(inc.road_id);
        if (it == series_by_road.end()) {
            out.excluded.push_back(inc.incident_id);
            continue;
        }
        try {
            rows[r].push_back(construct_features(it->second, inc.verification_index, h, t));
            labels[r].push_back(inc.duration_minutes);
        } catch (const InputError&) {
            out.excluded.push_back(inc.incident_id);
        }
    }

    out.train.graph = graph;
    out.test.graph = graph;
    out.train.h = out.test.h = h;
    out.train.t = out.test.t = t;
    for (std::size_t r = 0; r < graph.size(); ++r) {
        const auto n = static_cast<Index>(rows[r].size());
        if (n == 0) throw InputError("task " + graph.tasks[r] + " has no usable incidents");
        Matrix X(n, h + t);
        Vector Y(n);
        for (Index i = 0; i < n; ++i) {
            X.row(i) = rows[r][static_cast<std::size_t>(i)].transpose();
            Y(i) = labels[r][static_cast<std::size_t>(i)];
        }
        const auto perm = seeded_permutation(n, seed + 0x9E3779B97F4A7C15ULL * (r + 1));
        const Index n_train = std::max<Index>(1, static_cast<Index>(std::floor(split * n)));
        const std::vector<Index> train_rows(perm.begin(), perm.begin() + n_train);
        const std::vector<Index> test_rows(perm.begin() + n_train, perm.end());
        out.train.tasks.push_back(take_rows(graph.tasks[r], X, Y, train_rows));
        out.test.tasks.push_back(take_rows(graph.tasks[r], X, Y, test_rows));
    }
    return out;
}

Standardizer Standardizer::fit(const MultiTaskDataset& train) {
    const Index p = train.p();
    const Index n = train.total_rows();
    if (n < 1) throw InputError("cannot standardize an empty dataset");
    Standardizer s;
    s.mean = Vector::Zero(p);
    for (const auto& task : train.tasks) s.mean += task.X.colwise().sum().transpose();
    s.mean /= static_cast<double>(n);
    Vector var = Vector::Zero(p);
    for (const auto& task : train.tasks) {
        var += (task.X.rowwise() - s.mean.transpose()).array().square().colwise().sum().matrix().transpose();
    }
    var /= static_cast<double>(n);
    s.scale = var.array().sqrt().unaryExpr([](double v) { return v > 0.0 ? v : 1.0; });
    return s;
}

void Standardizer::apply(MultiTaskDataset& data) const {
    for (auto& task : data.tasks) {
        task.X = ((task.X.rowwise() - mean.transpose()).array().rowwise() /
                  scale.transpose().array()).matrix();
    }
}

std::vector<IncidentRecord> read_incidents_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open incident file: " + path);
    std::string line;
    int line_no = 1;
    if (!std::getline(in, line)) throw InputError(path + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "incident_id,road_id,verification_index,duration_minutes") {
        throw InputError(path + ":1: unexpected header '" + line + "'");
    }
    std::vector<IncidentRecord> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        const auto where = path + ":" + std::to_string(line_no);
        if (fields.size() != 4) throw InputError(where + ": expected 4 fields");
        IncidentRecord rec;
        rec.incident_id = fields[0];
        rec.road_id = fields[1];
        try {
            std::size_t used = 0;
            rec.verification_index = std::stol(fields[2], &used);
            if (used != fields[2].size()) throw std::invalid_argument("trailing");
            rec.duration_minutes = std::stod(fields[3], &used);
            if (used != fields[3].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw InputError(where + ": malformed number");
        }
        if (!(rec.duration_minutes > 0.0) || !std::isfinite(rec.duration_minutes)) {
            throw InputError(where + ": duration_minutes must be positive");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

SpeedSeries read_speed_csv(const std::string& path, const std::string& sensor_id) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open speed file: " + path);
    SpeedSeries s;
    s.sensor_id = sensor_id;
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": empty file");
    const std::string key = "# start_index=";
    if (line.rfind(key, 0) != 0) throw InputError(path + ":1: expected '# start_index=<int>'");
    try {
        s.start_index = std::stol(line.substr(key.size()));
    } catch (const std::exception&) {
        throw InputError(path + ":1: malformed start_index");
    }
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            std::size_t used = 0;
            s.readings.push_back(std::stod(line, &used));
            if (used != line.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw InputError(path + ":" + std::to_string(line_no) + ": malformed reading");
        }
    }
    s.validate();
    return s;
}

}  // namespace titan
