#include "cli.hpp"

#include "titan/baselines.hpp"
#include "titan/eval.hpp"
#include "titan/io.hpp"
#include "titan/roadnet.hpp"
#include "titan/solver.hpp"
#include "titan/synth.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace titan::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<int> parse_k_list(const std::string& text) {
    std::vector<int> ks;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            ks.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw InputError("--k expects a comma-separated list of integers, got '" + text + "'");
        }
    }
    if (ks.empty()) throw InputError("--k list is empty");
    return ks;
}

Hyperparams load_hyperparams(const std::string& path, const std::optional<std::uint64_t>& seed,
                             const std::string& k_text, bool no_orth) {
    Hyperparams hp = path.empty() ? Hyperparams{} : hyperparams_from_json(read_json(path));
    if (seed) hp.seed = *seed;
    if (!k_text.empty()) {
        const auto ks = parse_k_list(k_text);
        if (ks.size() != 1) throw InputError("train takes a single --k value");
        hp.k = ks.front();
    }
    if (no_orth) hp.orthogonality = false;
    return hp;
}

std::string fmt(double v, int digits = 6) {
    std::ostringstream out;
    out << std::setprecision(digits) << v;
    return out.str();
}

struct Options {
    std::string config, dataset, model, out, input, task, kind, incidents, speeds, network, k_text, grid;
    std::vector<std::string> models;
    std::optional<std::uint64_t> seed;
    bool no_orth = false;
    bool standardize = false;
    int h = 30, t = 30, folds = 5;
    double split = 0.8;
};

void cmd_synth(const Options& o, std::ostream& log) {
    SynthConfig config = o.config.empty() ? SynthConfig{} : synth_config_from_json(read_json(o.config));
    if (o.seed) config.seed = *o.seed;
    config.validate();
    SynthData data = generate(config);
    write_dataset(o.out, {std::move(data.train), std::move(data.test), std::move(data.truth)});
    log << "wrote synthetic dataset to " << o.out << "\n";
}

void cmd_assemble(const Options& o, std::ostream& log) {
    const auto network = read_edge_list(o.network);
    const TaskGraph graph = build_line_graph(network);
    const auto incidents = read_incidents_csv(o.incidents);
    std::map<std::string, SpeedSeries> series;
    for (const auto& road : graph.tasks) {
        const fs::path path = fs::path(o.speeds) / (road + ".csv");
        if (fs::exists(path)) series[road] = read_speed_csv(path.string(), road);
    }
    SplitDatasets split = assemble_dataset(incidents, series, graph, o.h, o.t, o.split, o.seed.value_or(0));
    std::optional<Standardizer> scaler;
    if (o.standardize) {
        scaler = Standardizer::fit(split.train);
        scaler->apply(split.train);
        scaler->apply(split.test);
    }
    write_dataset(o.out, {std::move(split.train), std::move(split.test), std::nullopt});
    if (scaler) {
        Json j;
        j["mean"] = std::vector<double>(scaler->mean.data(), scaler->mean.data() + scaler->mean.size());
        j["scale"] = std::vector<double>(scaler->scale.data(), scaler->scale.data() + scaler->scale.size());
        write_json((fs::path(o.out) / "standardizer.json").string(), j);
    }
    log << "wrote dataset with " << graph.size() << " tasks to " << o.out << "\n";
    for (const auto& id : split.excluded) log << "excluded incident " << id << " (window not covered)\n";
}

void cmd_linegraph(const Options& o, std::ostream& log) {
    const TaskGraph graph = build_line_graph(read_edge_list(o.network));
    std::ostringstream text;
    write_task_edges(text, graph);
    write_text(o.out, text.str());
    log << graph.size() << " tasks\n";
}

void cmd_train(const Options& o, std::ostream& log, std::ostream& err) {
    const StoredDataset data = read_dataset(o.dataset);
    const Hyperparams hp = load_hyperparams(o.config, o.seed, o.k_text, o.no_orth);
    const auto start = Clock::now();
    const TrainedModel model = fit(data.train, hp);
    const double elapsed = seconds_since(start);
    write_json(o.out, model_to_json(model));
    log << "iterations " << model.iterations << " converged " << (model.converged ? "true" : "false")
        << " primal " << fmt(model.final_residuals.primal) << " dual " << fmt(model.final_residuals.dual)
        << "\n";
    err << "wall time " << fmt(elapsed, 4) << " s\n";
}

void cmd_baseline(const Options& o, std::ostream& log) {
    const StoredDataset data = read_dataset(o.dataset);
    const BaselineKind kind = baseline_kind_from_string(o.kind);
    std::vector<double> grid = default_grid(kind);
    if (!o.grid.empty()) {
        grid.clear();
        std::stringstream ss(o.grid);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                grid.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw InputError("--grid expects comma-separated numbers, got '" + o.grid + "'");
            }
        }
    }
    const BaselineModel model = train_baseline(kind, data.train, grid, o.folds);
    write_json(o.out, baseline_to_json(model));
    log << to_string(kind) << " trained on " << model.tasks.size() << " tasks\n";
}

void cmd_predict(const Options& o, std::ostream& log, std::ostream& err) {
    const AnyModel model = any_model_from_json(read_json(o.model));
    const Matrix X = read_matrix_csv(o.input);
    if (X.rows() == 0) throw InputError(o.input + ": no rows");
    Vector yhat = model.predict(X, o.task);  // validates task and width up front
    const auto start = Clock::now();
    for (Index i = 0; i < X.rows(); ++i) yhat(i) = model.predict(X.row(i), o.task)(0);
    const double per_row_ms = 1e3 * seconds_since(start) / static_cast<double>(X.rows());
    write_vector_csv(o.out, yhat);
    log << "predicted " << X.rows() << " rows for " << o.task << "\n";
    err << "mean latency " << fmt(per_row_ms, 4) << " ms per row\n";
}

std::vector<std::pair<std::string, AnyModel>> load_labelled_models(const std::vector<std::string>& paths) {
    std::vector<std::pair<std::string, AnyModel>> out;
    std::set<std::string> used;
    for (const auto& path : paths) {
        AnyModel model = any_model_from_json(read_json(path));
        std::string label = model.kind;
        if (used.count(label)) label += "_" + fs::path(path).stem().string();
        if (!used.insert(label).second) throw InputError("duplicate model " + path);
        out.emplace_back(label, std::move(model));
    }
    return out;
}

void cmd_evaluate(const Options& o, std::ostream& log) {
    if (o.models.empty()) throw InputError("evaluate needs at least one --model");
    const StoredDataset data = read_dataset(o.dataset);
    std::vector<MetricsReport> reports;
    for (const auto& [label, model] : load_labelled_models(o.models)) {
        if (model.tasks() != data.test.graph.tasks) throw InputError("model " + label + " was trained on different tasks");
        if (model.p() != data.test.p()) {
            throw InputError("model " + label + " expects p = " + std::to_string(model.p()) + ", dataset has p = " +
                             std::to_string(data.test.p()));
        }
        reports.push_back(evaluate(label, model.k(), data.test,
                                   [&model](const Matrix& X, const std::string& task) { return model.predict(X, task); }));
        const auto& m = reports.back().overall;
        log << label << " pooled rmse " << fmt(m.rmse) << " mae " << fmt(m.mae) << " mape% " << fmt(m.mape_percent)
            << "\n";
    }
    write_text(o.out, emit_report_csv(reports));
}

void cmd_sweep_k(const Options& o, std::ostream& log) {
    if (o.k_text.empty()) throw InputError("sweep-k needs --k");
    const auto ks = parse_k_list(o.k_text);
    const StoredDataset data = read_dataset(o.dataset);
    Hyperparams hp = load_hyperparams(o.config, o.seed, "", o.no_orth);
    const auto reports = sweep_group_count(data.train, data.test, hp, ks);
    for (const auto& r : reports) log << "k " << r.k << " pooled rmse " << fmt(r.overall.rmse) << "\n";
    write_text(o.out, emit_report_csv(reports, true));
}

void cmd_report_groups(const Options& o, std::ostream& log) {
    const TrainedModel model = model_from_json(read_json(o.model));
    Json tasks = Json::object();
    for (const auto& [task, top] : top_group_per_task(model)) {
        tasks[task] = {{"group", top.group}, {"q", std::vector<double>(top.q.data(), top.q.data() + top.q.size())}};
    }
    const Matrix overlap = pairwise_support_overlap(model.Q);
    const Matrix inner = model.Q.transpose() * model.Q;
    Json pairs = Json::array();
    for (Index i = 0; i < model.k(); ++i) {
        for (Index j = i + 1; j < model.k(); ++j) {
            pairs.push_back({{"i", i}, {"j", j}, {"supportJaccard", overlap(i, j)}, {"innerProduct", inner(i, j)}});
        }
    }
    Json report;
    report["tasks"] = tasks;
    report["Q"] = matrix_to_json(model.Q);
    report["overlaps"] = pairs;
    write_json(o.out, report);
    log << "group report for " << model.tasks.size() << " tasks\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& log, std::ostream& err) {
    CLI::App app{"Multi-task incident duration models with grouped temporal features", "titan"};
    app.require_subcommand(1);
    Options o;
    std::uint64_t seed = 0;

    auto add_seed = [&](CLI::App* sub) { return sub->add_option("--seed", seed, "Override the configured seed"); };

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with planted structure");
    synth->add_option("--config", o.config, "SynthConfig JSON");
    synth->add_option("--out", o.out, "Output dataset directory")->required();
    auto* synth_seed = add_seed(synth);

    auto* assemble = app.add_subcommand("assemble", "Build a dataset from incidents, speed series and a road network");
    assemble->add_option("--incidents", o.incidents, "Incident CSV")->required()->check(CLI::ExistingFile);
    assemble->add_option("--speeds", o.speeds, "Directory of <road>.csv speed files")->required()->check(CLI::ExistingDirectory);
    assemble->add_option("--network", o.network, "Road network edge list")->required()->check(CLI::ExistingFile);
    assemble->add_option("--history", o.h, "Readings before verification (h)")->check(CLI::PositiveNumber);
    assemble->add_option("--horizon", o.t, "Readings from verification on (t)")->check(CLI::PositiveNumber);
    assemble->add_option("--split", o.split, "Train fraction per road");
    assemble->add_flag("--standardize", o.standardize, "Z-score features with training-split statistics");
    assemble->add_option("--out", o.out, "Output dataset directory")->required();
    auto* assemble_seed = add_seed(assemble);

    auto* linegraph = app.add_subcommand("linegraph", "Write the task graph of a road network");
    linegraph->add_option("--network", o.network, "Road network edge list")->required()->check(CLI::ExistingFile);
    linegraph->add_option("--out", o.out, "Output edge file")->required();

    auto* train = app.add_subcommand("train", "Fit a TITAN model");
    train->add_option("--dataset", o.dataset, "Dataset directory")->required();
    train->add_option("--config", o.config, "Hyperparameter JSON");
    train->add_option("--k", o.k_text, "Group count");
    train->add_flag("--no-orth", o.no_orth, "Disable the orthogonality penalty path");
    train->add_option("--out", o.out, "Output model JSON")->required();
    auto* train_seed = add_seed(train);

    auto* baseline = app.add_subcommand("baseline", "Fit a ridge, lasso or nmtl reference model");
    baseline->add_option("--dataset", o.dataset, "Dataset directory")->required();
    baseline->add_option("--kind", o.kind, "ridge, lasso or nmtl")->required();
    baseline->add_option("--grid", o.grid, "Comma-separated penalty grid");
    baseline->add_option("--folds", o.folds, "Cross-validation folds")->check(CLI::Range(2, 100));
    baseline->add_option("--out", o.out, "Output model JSON")->required();

    auto* predict_cmd = app.add_subcommand("predict", "Predict durations for the rows of a feature CSV");
    predict_cmd->add_option("--model", o.model, "Model JSON")->required();
    predict_cmd->add_option("--input", o.input, "Feature CSV, one row per incident")->required();
    predict_cmd->add_option("--task", o.task, "Road id")->required();
    predict_cmd->add_option("--out", o.out, "Output CSV")->required();

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score models on the test split");
    evaluate_cmd->add_option("--dataset", o.dataset, "Dataset directory")->required();
    evaluate_cmd->add_option("--model", o.models, "Model JSON (repeatable)")->required();
    evaluate_cmd->add_option("--out", o.out, "Report CSV")->required();

    auto* sweep = app.add_subcommand("sweep-k", "Train and score one model per group count");
    sweep->add_option("--dataset", o.dataset, "Dataset directory")->required();
    sweep->add_option("--config", o.config, "Hyperparameter JSON");
    sweep->add_option("--k", o.k_text, "Comma-separated group counts")->required();
    sweep->add_flag("--no-orth", o.no_orth, "Disable the orthogonality penalty path");
    sweep->add_option("--out", o.out, "Report CSV")->required();
    auto* sweep_seed = add_seed(sweep);

    auto* groups = app.add_subcommand("report-groups", "Top group per task and Q diagnostics");
    groups->add_option("--model", o.model, "TITAN model JSON")->required();
    groups->add_option("--out", o.out, "Output JSON")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, log, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, log, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, log, err);
        return input_error;
    }
    for (auto* opt : {synth_seed, assemble_seed, train_seed, sweep_seed}) {
        if (opt->count()) o.seed = seed;
    }

    try {
        if (synth->parsed()) cmd_synth(o, log);
        else if (assemble->parsed()) cmd_assemble(o, log);
        else if (linegraph->parsed()) cmd_linegraph(o, log);
        else if (train->parsed()) cmd_train(o, log, err);
        else if (baseline->parsed()) cmd_baseline(o, log);
        else if (predict_cmd->parsed()) cmd_predict(o, log, err);
        else if (evaluate_cmd->parsed()) cmd_evaluate(o, log);
        else if (sweep->parsed()) cmd_sweep_k(o, log);
        else if (groups->parsed()) cmd_report_groups(o, log);
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return numerical_error;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    }
    return ok;
}

}  // namespace titan::cli
