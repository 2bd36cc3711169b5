#include "titan/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace titan {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    return out;
}

std::vector<double> parse_row(const std::string& line, const std::string& where) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            row.push_back(std::stod(cell, &used));
            while (used < cell.size() && (cell[used] == ' ' || cell[used] == '\t')) ++used;
            if (used != cell.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw InputError(where + ": malformed number '" + cell + "'");
        }
    }
    if (!line.empty() && line.back() == ',') throw InputError(where + ": empty field");
    return row;
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    return it == j.end() ? fallback : it->template get<T>();
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& what) {
    if (!j.is_object()) throw InputError(what + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw InputError("unknown " + what + " key: " + key);
    }
}

std::string inner_solve_name(InnerWSolve v) { return v == InnerWSolve::exact ? "exact" : "gradient"; }
std::string q_init_name(QInit v) { return v == QInit::identity ? "identity" : "perturbed_identity"; }

std::string graph_kind_name(GraphKind kind) {
    switch (kind) {
        case GraphKind::star: return "star";
        case GraphKind::path: return "path";
        case GraphKind::complete: return "complete";
        case GraphKind::custom: return "custom";
    }
    return "custom";
}

GraphKind graph_kind_from(const std::string& name) {
    if (name == "star") return GraphKind::star;
    if (name == "path") return GraphKind::path;
    if (name == "complete") return GraphKind::complete;
    if (name == "custom") return GraphKind::custom;
    throw InputError("unknown graphKind: " + name);
}

Json task_graph_json(const MultiTaskDataset& d) {
    Json j;
    j["tasks"] = d.graph.tasks;
    j["adjacency"] = matrix_to_json(d.graph.adjacency);
    j["p"] = d.p();
    j["h"] = d.h;
    j["t"] = d.t;
    return j;
}

void write_split(const fs::path& dir, const MultiTaskDataset& d) {
    fs::create_directories(dir);
    for (const auto& task : d.tasks) {
        write_matrix_csv((dir / ("X_" + task.road_id + ".csv")).string(), task.X);
        write_vector_csv((dir / ("Y_" + task.road_id + ".csv")).string(), task.Y);
    }
}

MultiTaskDataset read_split(const fs::path& dir, const TaskGraph& graph, Index p, int h, int t) {
    MultiTaskDataset d;
    d.graph = graph;
    d.h = h;
    d.t = t;
    for (const auto& road : graph.tasks) {
        TaskDataset task;
        task.road_id = road;
        const auto xpath = (dir / ("X_" + road + ".csv")).string();
        task.X = read_matrix_csv(xpath);
        task.Y = read_vector_csv((dir / ("Y_" + road + ".csv")).string());
        if (task.X.rows() == 0) task.X.resize(0, p);
        if (task.X.cols() != p) {
            throw InputError(xpath + ": " + std::to_string(task.X.cols()) + " columns, dataset declares p = " +
                             std::to_string(p));
        }
        if (task.X.rows() != task.Y.size()) {
            throw InputError(xpath + ": " + std::to_string(task.X.rows()) + " rows but Y has " +
                             std::to_string(task.Y.size()));
        }
        d.tasks.push_back(std::move(task));
    }
    return d;
}

}  // namespace

void write_matrix_csv(const std::string& path, const Matrix& M) {
    auto out = open_out(path);
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j) out << ',';
            out << format_double(M(i, j));
        }
        out << '\n';
    }
    if (!out) throw InputError("write failed: " + path);
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto where = path + ":" + std::to_string(line_no);
        auto row = parse_row(line, where);
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw InputError(where + ": expected " + std::to_string(rows.front().size()) + " fields, found " +
                             std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    Matrix M(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return M;
}

void write_vector_csv(const std::string& path, const Vector& v) { write_matrix_csv(path, v); }

Vector read_vector_csv(const std::string& path) {
    const Matrix M = read_matrix_csv(path);
    if (M.rows() > 0 && M.cols() != 1) throw InputError(path + ": expected one value per line");
    return M.rows() ? Vector(M.col(0)) : Vector();
}

void write_dataset(const std::string& dir, const StoredDataset& data) {
    data.train.validate();
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw InputError("cannot create " + dir + ": " + ec.message());
    write_json((root / "tasks.json").string(), task_graph_json(data.train));
    {
        auto out = open_out((root / "graph.edges").string());
        write_task_edges(out, data.train.graph);
    }
    write_split(root / "train", data.train);
    write_split(root / "test", data.test);
    if (data.truth) {
        Json truth;
        truth["Q"] = matrix_to_json(data.truth->Q);
        truth["W"] = matrix_to_json(data.truth->W);
        truth["blocks"] = data.truth->blocks;
        write_json((root / "ground_truth.json").string(), truth);
    }
}

StoredDataset read_dataset(const std::string& dir) {
    const fs::path root(dir);
    if (!fs::is_directory(root)) throw InputError("dataset directory not found: " + dir);
    const auto meta_path = (root / "tasks.json").string();
    const Json meta = read_json(meta_path);
    StoredDataset out;
    try {
        auto tasks = meta.at("tasks").get<std::vector<std::string>>();
        const Matrix adjacency = matrix_from_json(meta.at("adjacency"), "adjacency");
        const auto graph = TaskGraph::from_adjacency(std::move(tasks), adjacency);
        const auto p = meta.at("p").get<Index>();
        const int h = meta.at("h").get<int>();
        const int t = meta.at("t").get<int>();
        out.train = read_split(root / "train", graph, p, h, t);
        out.test = read_split(root / "test", graph, p, h, t);
    } catch (const Json::exception& e) {
        throw InputError(meta_path + ": " + e.what());
    }
    out.train.validate();
    out.test.validate(true);
    const auto truth_path = root / "ground_truth.json";
    if (fs::exists(truth_path)) {
        const Json truth = read_json(truth_path.string());
        try {
            GroundTruth g;
            g.Q = matrix_from_json(truth.at("Q"), "Q");
            g.W = matrix_from_json(truth.at("W"), "W");
            g.blocks = truth.at("blocks").get<std::vector<std::vector<Index>>>();
            out.truth = std::move(g);
        } catch (const Json::exception& e) {
            throw InputError(truth_path.string() + ": " + e.what());
        }
    }
    return out;
}

Json matrix_to_json(const Matrix& M) {
    Json rows = Json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
    if (!j.is_array()) throw InputError(what + " must be an array of rows");
    const auto rows = static_cast<Index>(j.size());
    const Index cols = rows ? static_cast<Index>(j.front().size()) : 0;
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw InputError(what + ": row " + std::to_string(i) + " has the wrong length");
        }
        for (Index c = 0; c < cols; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw InputError(what + ": non-numeric entry in row " + std::to_string(i));
            M(i, c) = v.get<double>();
        }
    }
    return M;
}

Json hyperparams_to_json(const Hyperparams& hp) {
    Json j;
    j["lambdaW"] = hp.lambda_w;
    j["lambdaQ"] = hp.lambda_q;
    j["lambdaConn"] = hp.lambda_conn;
    j["rho"] = hp.rho;
    j["k"] = hp.k;
    j["alpha"] = hp.alpha;
    j["maxIter"] = hp.max_iter;
    j["epsPrimal"] = hp.eps_primal;
    j["epsDual"] = hp.eps_dual;
    j["innerWSolve"] = inner_solve_name(hp.inner_w_solve);
    j["seed"] = hp.seed;
    j["orthogonality"] = hp.orthogonality;
    j["updateQ"] = hp.update_q;
    j["qInit"] = q_init_name(hp.q_init);
    j["adaptiveRho"] = hp.adaptive_rho;
    j["rhoBalance"] = hp.rho_balance;
    j["rhoScale"] = hp.rho_scale;
    j["rhoMax"] = hp.rho_max;
    Json edges = Json::array();
    for (const auto& [edge, lam] : hp.edge_lambda) {
        edges.push_back({{"a", edge.first}, {"b", edge.second}, {"lambda", lam}});
    }
    j["edgeLambda"] = edges;
    return j;
}

Hyperparams hyperparams_from_json(const Json& j) {
    reject_unknown(j,
                   {"lambdaW", "lambdaQ", "lambdaConn", "rho", "k", "alpha", "maxIter", "epsPrimal", "epsDual",
                    "innerWSolve", "seed", "orthogonality", "updateQ", "qInit", "adaptiveRho", "rhoBalance",
                    "rhoScale", "rhoMax", "edgeLambda"},
                   "hyperparameter");
    Hyperparams hp;
    try {
        hp.lambda_w = get_or(j, "lambdaW", hp.lambda_w);
        hp.lambda_q = get_or(j, "lambdaQ", hp.lambda_q);
        hp.lambda_conn = get_or(j, "lambdaConn", hp.lambda_conn);
        hp.rho = get_or(j, "rho", hp.rho);
        hp.k = get_or(j, "k", hp.k);
        hp.alpha = get_or(j, "alpha", hp.alpha);
        hp.max_iter = get_or(j, "maxIter", hp.max_iter);
        hp.eps_primal = get_or(j, "epsPrimal", hp.eps_primal);
        hp.eps_dual = get_or(j, "epsDual", hp.eps_dual);
        hp.seed = get_or(j, "seed", hp.seed);
        hp.orthogonality = get_or(j, "orthogonality", hp.orthogonality);
        hp.update_q = get_or(j, "updateQ", hp.update_q);
        hp.adaptive_rho = get_or(j, "adaptiveRho", hp.adaptive_rho);
        hp.rho_balance = get_or(j, "rhoBalance", hp.rho_balance);
        hp.rho_scale = get_or(j, "rhoScale", hp.rho_scale);
        hp.rho_max = get_or(j, "rhoMax", hp.rho_max);
        const auto solve = get_or<std::string>(j, "innerWSolve", inner_solve_name(hp.inner_w_solve));
        if (solve == "exact") {
            hp.inner_w_solve = InnerWSolve::exact;
        } else if (solve == "gradient") {
            hp.inner_w_solve = InnerWSolve::gradient;
        } else {
            throw InputError("innerWSolve must be 'exact' or 'gradient', got '" + solve + "'");
        }
        const auto init = get_or<std::string>(j, "qInit", q_init_name(hp.q_init));
        if (init == "identity") {
            hp.q_init = QInit::identity;
        } else if (init == "perturbed_identity") {
            hp.q_init = QInit::perturbed_identity;
        } else {
            throw InputError("qInit must be 'identity' or 'perturbed_identity', got '" + init + "'");
        }
        if (const auto it = j.find("edgeLambda"); it != j.end()) {
            for (const auto& e : *it) {
                auto a = e.at("a").get<std::string>();
                auto b = e.at("b").get<std::string>();
                if (b < a) std::swap(a, b);
                hp.edge_lambda[{a, b}] = e.at("lambda").get<double>();
            }
        }
    } catch (const Json::exception& e) {
        throw InputError(std::string("hyperparameters: ") + e.what());
    }
    return hp;
}

Json synth_config_to_json(const SynthConfig& c) {
    Json j;
    j["T"] = c.T;
    j["p"] = c.p;
    j["k"] = c.k;
    j["nPerTask"] = c.n_per_task;
    j["noiseSigma"] = c.noise_sigma;
    j["graphKind"] = graph_kind_name(c.graph_kind);
    j["edgeList"] = c.edge_list;
    j["weightSmoothness"] = c.weight_smoothness;
    j["featureCorr"] = c.feature_corr;
    j["split"] = c.split;
    j["splitOverrides"] = c.split_overrides;
    j["seed"] = c.seed;
    return j;
}

SynthConfig synth_config_from_json(const Json& j) {
    reject_unknown(j,
                   {"T", "p", "k", "nPerTask", "noiseSigma", "graphKind", "edgeList", "weightSmoothness",
                    "featureCorr", "split", "splitOverrides", "seed"},
                   "synthetic config");
    SynthConfig c;
    try {
        c.T = get_or(j, "T", c.T);
        c.p = get_or(j, "p", c.p);
        c.k = get_or(j, "k", c.k);
        c.n_per_task = get_or(j, "nPerTask", c.n_per_task);
        c.noise_sigma = get_or(j, "noiseSigma", c.noise_sigma);
        c.graph_kind = graph_kind_from(get_or<std::string>(j, "graphKind", graph_kind_name(c.graph_kind)));
        c.edge_list = get_or(j, "edgeList", c.edge_list);
        c.weight_smoothness = get_or(j, "weightSmoothness", c.weight_smoothness);
        c.feature_corr = get_or(j, "featureCorr", c.feature_corr);
        c.split = get_or(j, "split", c.split);
        c.split_overrides = get_or(j, "splitOverrides", c.split_overrides);
        c.seed = get_or(j, "seed", c.seed);
    } catch (const Json::exception& e) {
        throw InputError(std::string("synthetic config: ") + e.what());
    }
    return c;
}

Json model_to_json(const TrainedModel& model) {
    Json j;
    j["kind"] = "titan";
    j["p"] = model.p();
    j["k"] = model.k();
    j["tasks"] = model.tasks;
    j["Q"] = matrix_to_json(model.Q);
    j["W"] = matrix_to_json(model.W);
    j["hyperparams"] = hyperparams_to_json(model.hyperparams);
    j["converged"] = model.converged;
    j["iterations"] = model.iterations;
    j["residuals"] = {{"primal", model.final_residuals.primal}, {"dual", model.final_residuals.dual}};
    j["orthogonalityGap"] = model.orthogonality_gap;
    j["finalRho"] = model.final_rho;
    return j;
}

TrainedModel model_from_json(const Json& j) {
    TrainedModel m;
    try {
        if (j.contains("kind") && j.at("kind") != "titan") {
            throw InputError("model kind is '" + j.at("kind").get<std::string>() + "', expected 'titan'");
        }
        m.tasks = j.at("tasks").get<std::vector<std::string>>();
        m.Q = matrix_from_json(j.at("Q"), "Q");
        m.W = matrix_from_json(j.at("W"), "W");
        m.hyperparams = hyperparams_from_json(j.at("hyperparams"));
        m.converged = j.at("converged").get<bool>();
        m.iterations = j.at("iterations").get<int>();
        m.final_residuals.primal = j.at("residuals").at("primal").get<double>();
        m.final_residuals.dual = j.at("residuals").at("dual").get<double>();
        m.orthogonality_gap = get_or(j, "orthogonalityGap", 0.0);
        m.final_rho = get_or(j, "finalRho", m.hyperparams.rho);
        if (j.at("p").get<Index>() != m.Q.rows() || j.at("k").get<Index>() != m.Q.cols()) {
            throw InputError("model p/k do not match the shape of Q");
        }
    } catch (const Json::exception& e) {
        throw InputError(std::string("model: ") + e.what());
    }
    if (m.W.rows() != m.Q.cols() || m.W.cols() != static_cast<Index>(m.tasks.size())) {
        throw InputError("model W must be k x T");
    }
    return m;
}

Json baseline_to_json(const BaselineModel& model) {
    Json j;
    j["kind"] = to_string(model.kind);
    j["p"] = model.weights.rows();
    j["k"] = model.weights.rows();
    j["tasks"] = model.tasks;
    j["W"] = matrix_to_json(model.weights);
    j["hyperparams"] = {{"lambda", model.lambda}};
    return j;
}

BaselineModel baseline_from_json(const Json& j) {
    BaselineModel m;
    try {
        m.kind = baseline_kind_from_string(j.at("kind").get<std::string>());
        m.tasks = j.at("tasks").get<std::vector<std::string>>();
        m.weights = matrix_from_json(j.at("W"), "W");
        m.lambda = j.at("hyperparams").at("lambda").get<std::vector<double>>();
    } catch (const Json::exception& e) {
        throw InputError(std::string("baseline model: ") + e.what());
    }
    if (m.weights.cols() != static_cast<Index>(m.tasks.size())) throw InputError("baseline W must be p x T");
    return m;
}

const std::vector<std::string>& AnyModel::tasks() const { return titan ? titan->tasks : baseline->tasks; }

Index AnyModel::p() const { return titan ? titan->p() : baseline->weights.rows(); }

int AnyModel::k() const { return titan ? static_cast<int>(titan->k()) : 0; }

Vector AnyModel::predict(const Matrix& X, const std::string& task) const {
    return titan ? titan::predict(*titan, X, task) : baseline->predict(X, task);
}

AnyModel any_model_from_json(const Json& j) {
    AnyModel out;
    if (!j.is_object()) throw InputError("model file must hold a JSON object");
    out.kind = j.contains("kind") && j.at("kind").is_string() ? j.at("kind").get<std::string>() : "titan";
    if (out.kind == "titan") {
        out.titan = model_from_json(j);
    } else {
        out.baseline = baseline_from_json(j);
    }
    return out;
}

Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    if (!out) throw InputError("write failed: " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace titan
