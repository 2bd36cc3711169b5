#include "doctest.h"

#include "cli.hpp"
#include "test_util.hpp"
#include "titan/eval.hpp"
#include "titan/io.hpp"
#include "titan/synth.hpp"

#include <algorithm>
#include <sstream>

using namespace titan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string log, err;
};

Outcome titan_cli(std::vector<std::string> args) {
    std::ostringstream log, err;
    const int code = cli::run(args, log, err);
    return {code, log.str(), err.str()};
}

std::size_t count_files(const fs::path& dir) {
    return static_cast<std::size_t>(std::count_if(fs::recursive_directory_iterator(dir), fs::recursive_directory_iterator{},
                                                  [](const fs::directory_entry& e) { return e.is_regular_file(); }));
}

// A small synthetic dataset shared by the tests below.
std::string small_dataset(const TempDir& dir, const std::string& name = "ds") {
    const auto cfg = dir.write(name + ".json", R"({"T": 6, "p": 12, "k": 3, "nPerTask": 60, "noiseSigma": 0.5})");
    const auto out = titan_cli({"synth", "--config", cfg, "--out", dir.file(name)});
    REQUIRE(out.code == 0);
    return dir.file(name);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth writes the dataset layout deterministically") {
    TempDir dir;
    const auto a = small_dataset(dir, "a");
    const auto b = small_dataset(dir, "b");
    CHECK(count_files(a) == 6 * 4 + 3);
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), a);
        CHECK(read_text(entry.path().string()) == read_text((fs::path(b) / rel).string()));
    }
    CHECK(titan_cli({"synth", "--config", dir.file("a.json"), "--out", dir.file("c"), "--seed", "99"}).code == 0);
    CHECK(read_text(dir.file("c/train/X_road_00.csv")) != read_text(a + "/train/X_road_00.csv"));
}

TEST_CASE("usage and configuration errors exit with 2") {
    TempDir dir;
    CHECK(titan_cli({}).code == 2);
    CHECK(titan_cli({"frobnicate"}).code == 2);
    CHECK(titan_cli({"--help"}).code == 0);
    CHECK(titan_cli({"train", "--dataset", dir.file("none"), "--out", dir.file("m.json")}).code == 2);
    const auto cfg = dir.write("bad.json", R"({"p": 60, "k": 7})");
    const auto bad = titan_cli({"synth", "--config", cfg, "--out", dir.file("x")});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("k must divide p") != std::string::npos);
}

TEST_CASE("corrupt dataset file reports path and line") {
    TempDir dir;
    const auto ds = small_dataset(dir);
    std::string text = read_text(ds + "/train/X_road_02.csv");
    const auto second = text.find('\n') + 1;
    text.replace(second, text.find(',', second) - second, "abc");
    write_text(ds + "/train/X_road_02.csv", text);
    const auto out = titan_cli({"train", "--dataset", ds, "--out", dir.file("m.json")});
    CHECK(out.code == 2);
    CHECK(out.err.find("X_road_02.csv:2") != std::string::npos);
}

TEST_CASE("train, predict and evaluate") {
    TempDir dir;
    const auto ds = small_dataset(dir);
    const auto trained = titan_cli({"train", "--dataset", ds, "--k", "3", "--out", dir.file("titan.json")});
    REQUIRE(trained.code == 0);
    CHECK(trained.log.find("iterations") != std::string::npos);
    CHECK(trained.err.find("wall time") != std::string::npos);
    for (const std::string kind : {"ridge", "lasso", "nmtl"}) {
        REQUIRE(titan_cli({"baseline", "--dataset", ds, "--kind", kind, "--out", dir.file(kind + ".json")}).code == 0);
    }
    CHECK(titan_cli({"baseline", "--dataset", ds, "--kind", "svr", "--out", dir.file("x.json")}).code == 2);

    const auto data = read_dataset(ds);
    const auto model = model_from_json(read_json(dir.file("titan.json")));
    const auto& task = data.test.tasks[1];
    write_matrix_csv(dir.file("rows.csv"), task.X);
    const auto pred = titan_cli({"predict", "--model", dir.file("titan.json"), "--input", dir.file("rows.csv"),
                                 "--task", task.road_id, "--out", dir.file("yhat.csv")});
    REQUIRE(pred.code == 0);
    CHECK(pred.err.find("ms per row") != std::string::npos);
    const Vector yhat = read_vector_csv(dir.file("yhat.csv"));
    CHECK((yhat - predict(model, task.X, task.road_id)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(titan_cli({"predict", "--model", dir.file("titan.json"), "--input", dir.file("rows.csv"), "--task",
                     "road_77", "--out", dir.file("y2.csv")}).code == 2);
    write_matrix_csv(dir.file("narrow.csv"), Matrix::Ones(2, 5));
    CHECK(titan_cli({"predict", "--model", dir.file("titan.json"), "--input", dir.file("narrow.csv"), "--task",
                     task.road_id, "--out", dir.file("y3.csv")}).code == 2);

    const auto ev = titan_cli({"evaluate", "--dataset", ds, "--model", dir.file("titan.json"), "--model",
                               dir.file("ridge.json"), "--model", dir.file("lasso.json"), "--model",
                               dir.file("nmtl.json"), "--out", dir.file("report.csv")});
    REQUIRE(ev.code == 0);
    const auto reports = parse_report_csv(read_text(dir.file("report.csv")));
    REQUIRE(reports.size() == 4);
    CHECK(reports[0].method == "titan");
    CHECK(reports[0].k == 3);
    CHECK(reports[1].k == 0);
    const std::string csv = read_text(dir.file("report.csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 24);
    const auto direct = evaluate(model, data.test);
    CHECK(reports[0].per_task.at("road_01").rmse == doctest::Approx(direct.per_task.at("road_01").rmse).epsilon(1e-3));

    const auto groups = titan_cli({"report-groups", "--model", dir.file("titan.json"), "--out", dir.file("g.json")});
    REQUIRE(groups.code == 0);
    const auto g = read_json(dir.file("g.json"));
    CHECK(g.at("tasks").size() == 6);
    CHECK(g.at("tasks").at("road_00").at("q").size() == 12);
    CHECK(g.at("Q").size() == 12);
    CHECK(g.at("overlaps").size() == 3);
    CHECK(titan_cli({"report-groups", "--model", dir.file("ridge.json"), "--out", dir.file("g2.json")}).code == 2);
}

TEST_CASE("noiseless data converges and the planted model scores zero") {
    TempDir dir;
    const auto cfg = dir.write("c.json", R"({"noiseSigma": 0.0})");
    REQUIRE(titan_cli({"synth", "--config", cfg, "--out", dir.file("ds")}).code == 0);
    const auto out = titan_cli({"train", "--dataset", dir.file("ds"), "--out", dir.file("m.json")});
    REQUIRE(out.code == 0);
    CHECK(model_from_json(read_json(dir.file("m.json"))).converged);
    CHECK(out.log.find("converged true") != std::string::npos);

    const auto data = read_dataset(dir.file("ds"));
    TrainedModel planted;
    planted.Q = data.truth->Q;
    planted.W = data.truth->W;
    planted.tasks = data.test.graph.tasks;
    write_json(dir.file("truth.json"), model_to_json(planted));
    REQUIRE(titan_cli({"evaluate", "--dataset", dir.file("ds"), "--model", dir.file("truth.json"), "--out",
                       dir.file("r.csv")}).code == 0);
    const auto reports = parse_report_csv(read_text(dir.file("r.csv")));
    for (const auto& [task, m] : reports.at(0).per_task) {
        CHECK(m.rmse == 0.0);
        CHECK(m.mae == 0.0);
        CHECK(m.mape_percent == 0.0);
    }
}

TEST_CASE("predict keeps row order on a large input") {
    TempDir dir;
    const auto ds = small_dataset(dir);
    REQUIRE(titan_cli({"train", "--dataset", ds, "--k", "3", "--out", dir.file("m.json")}).code == 0);
    const auto model = model_from_json(read_json(dir.file("m.json")));
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    Matrix X(1000, 12);
    for (Index i = 0; i < X.size(); ++i) X(i) = normal(rng);
    write_matrix_csv(dir.file("rows.csv"), X);
    REQUIRE(titan_cli({"predict", "--model", dir.file("m.json"), "--input", dir.file("rows.csv"), "--task", "road_03",
                       "--out", dir.file("y.csv")}).code == 0);
    const Vector y = read_vector_csv(dir.file("y.csv"));
    REQUIRE(y.size() == 1000);
    CHECK(y == predict(model, X, "road_03"));
}

TEST_CASE("report-groups follows planted shifted groups") {
    // Five overlapping blocks of 14 features, each starting about 12 features after
    // the previous one. The hub loads on block 1 and the first spoke on block 2.
    TempDir dir;
    SynthConfig c;
    c.noise_sigma = 1.0;
    const auto graph = synth_graph(c);
    const Index starts[5] = {0, 11, 23, 35, 46};
    GroundTruth truth;
    truth.Q = Matrix::Zero(60, 5);
    for (Index j = 0; j < 5; ++j) {
        std::vector<Index> block;
        for (Index i = starts[j]; i < starts[j] + 14; ++i) {
            truth.Q(i, j) = 1.0;
            block.push_back(i);
        }
        truth.Q.col(j).normalize();
        truth.blocks.push_back(block);
    }
    truth.W = Matrix::Constant(5, 6, 0.5);
    truth.W(1, 0) = 6.0;
    truth.W(2, 1) = 6.0;
    for (Index r = 2; r < 6; ++r) truth.W(r % 5, r) = 4.0;
    auto data = generate_from_truth(c, graph, truth);
    write_dataset(dir.file("ds"), {data.train, data.test, data.truth});

    REQUIRE(titan_cli({"train", "--dataset", dir.file("ds"), "--out", dir.file("m.json")}).code == 0);
    REQUIRE(titan_cli({"report-groups", "--model", dir.file("m.json"), "--out", dir.file("g.json")}).code == 0);
    const auto report = read_json(dir.file("g.json"));
    auto top_support = [&](const std::string& task) {
        const auto q = report.at("tasks").at(task).at("q").get<std::vector<double>>();
        return support(Eigen::Map<const Vector>(q.data(), static_cast<Index>(q.size())));
    };
    const auto hub = top_support("road_00");
    const auto spoke = top_support("road_01");
    CHECK(report.at("tasks").at("road_00").at("group") != report.at("tasks").at("road_01").at("group"));
    CHECK(jaccard(hub, {truth.blocks[1].begin(), truth.blocks[1].end()}) >= 0.8);
    CHECK(jaccard(spoke, {truth.blocks[2].begin(), truth.blocks[2].end()}) >= 0.8);
    REQUIRE_FALSE(hub.empty());
    REQUIRE_FALSE(spoke.empty());
    CHECK(*spoke.begin() > *hub.begin());
    CHECK(*spoke.rbegin() > *hub.rbegin());
}

TEST_CASE("sweep-k") {
    TempDir dir;
    const auto ds = small_dataset(dir);
    const auto out = titan_cli({"sweep-k", "--dataset", ds, "--k", "2,3", "--out", dir.file("sweep.csv")});
    REQUIRE(out.code == 0);
    const auto reports = parse_report_csv(read_text(dir.file("sweep.csv")));
    REQUIRE(reports.size() == 2);
    CHECK(reports[1].k == 3);
    CHECK(reports[1].overall.rmse > 0.0);
    const auto bad = titan_cli({"sweep-k", "--dataset", ds, "--k", "2,13", "--out", dir.file("s2.csv")});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("k = 13") != std::string::npos);
    CHECK(titan_cli({"sweep-k", "--dataset", ds, "--k", "2,x", "--out", dir.file("s3.csv")}).code == 2);
    CHECK(titan_cli({"sweep-k", "--dataset", ds, "--k", "", "--out", dir.file("s4.csv")}).code == 2);
}

TEST_CASE("assemble from incidents and speed files") {
    TempDir dir;
    const auto net = dir.write("net.txt", "a b r1\nb c r2\nc d r3\n");
    std::string inc = "incident_id,road_id,verification_index,duration_minutes\n";
    for (int i = 0; i < 10; ++i) {
        for (const std::string road : {"r1", "r2", "r3"}) {
            inc += road + "_" + std::to_string(i) + "," + road + "," + std::to_string(10 + 3 * i) + "," +
                   std::to_string(20 + i) + "\n";
        }
    }
    inc += "late,r1,500,9\n";
    const auto incidents = dir.write("inc.csv", inc);
    for (const std::string road : {"r1", "r2", "r3"}) {
        std::string speeds = "# start_index=0\n";
        for (int i = 0; i < 60; ++i) speeds += std::to_string(40 + (i * 7) % 13) + "\n";
        dir.write("speeds/" + road + ".csv", speeds);
    }
    const auto out = titan_cli({"assemble", "--incidents", incidents, "--speeds", dir.file("speeds"), "--network",
                                net, "--history", "4", "--horizon", "3", "--standardize", "--out", dir.file("ds")});
    REQUIRE(out.code == 0);
    CHECK(out.log.find("excluded incident late") != std::string::npos);
    const auto data = read_dataset(dir.file("ds"));
    CHECK(data.train.p() == 7);
    CHECK(data.train.tasks[0].n() == 8);
    CHECK(data.test.tasks[2].n() == 2);
    CHECK(data.train.graph.adjacency(0, 1) == 1.0);
    const auto scaler = read_json(dir.file("ds/standardizer.json"));
    CHECK(scaler.at("mean").size() == 7);
    Vector col_mean = Vector::Zero(7);
    for (const auto& t : data.train.tasks) col_mean += t.X.colwise().sum().transpose();
    CHECK(col_mean.cwiseAbs().maxCoeff() < 1e-9);

    CHECK(titan_cli({"linegraph", "--network", net, "--out", dir.file("edges.txt")}).code == 0);
    CHECK(read_text(dir.file("edges.txt")).find("r1 r2") != std::string::npos);
    const auto bad_net = dir.write("bad.txt", "a b r1\nb c\n");
    const auto failed = titan_cli({"linegraph", "--network", bad_net, "--out", dir.file("e2.txt")});
    CHECK(failed.code == 2);
    CHECK(failed.err.find("bad.txt:2") != std::string::npos);
}

TEST_CASE("non-finite training data exits with 3") {
    TempDir dir;
    const auto ds = small_dataset(dir);
    auto data = read_dataset(ds);
    data.train.tasks[0].X(0, 0) = 1e300;
    data.train.tasks[0].X(1, 0) = -1e300;
    write_dataset(ds, data);
    const auto out = titan_cli({"train", "--dataset", ds, "--out", dir.file("m.json")});
    CHECK(out.code == 3);
}

}
