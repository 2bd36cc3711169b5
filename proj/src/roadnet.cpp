#include "titan/roadnet.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace titan {

void RoadNetwork::validate() const {
    std::set<std::string> roads;
    for (const auto& e : edges) {
        if (e.a == e.b) {
            throw InputError("road " + e.road + " is a self loop at vertex " + e.a);
        }
        if (!vertices.count(e.a) || !vertices.count(e.b)) {
            throw InputError("road " + e.road + " references an unknown vertex");
        }
        if (!roads.insert(e.road).second) {
            throw InputError("duplicate road: " + e.road);
        }
    }
}

std::size_t TaskGraph::index_of(const std::string& road) const {
    const auto it = std::find(tasks.begin(), tasks.end(), road);
    if (it == tasks.end()) {
        throw InputError("unknown road: " + road);
    }
    return static_cast<std::size_t>(it - tasks.begin());
}

void TaskGraph::validate() const {
    const auto n = static_cast<Index>(tasks.size());
    if (adjacency.rows() != n || adjacency.cols() != n) {
        throw InputError("adjacency shape does not match task count");
    }
    if (degree.size() != tasks.size()) {
        throw InputError("degree vector does not match task count");
    }
    for (Index i = 0; i < n; ++i) {
        if (adjacency(i, i) != 0.0) {
            throw InputError("adjacency has a nonzero diagonal at task " + tasks[i]);
        }
        int row_sum = 0;
        for (Index j = 0; j < n; ++j) {
            const double v = adjacency(i, j);
            if (v != 0.0 && v != 1.0) {
                throw InputError("adjacency entries must be 0 or 1");
            }
            if (v != adjacency(j, i)) {
                throw InputError("adjacency is not symmetric");
            }
            row_sum += static_cast<int>(v);
        }
        if (row_sum != degree[i]) {
            throw InputError("degree mismatch at task " + tasks[i]);
        }
    }
}

TaskGraph TaskGraph::isolated(std::vector<std::string> tasks) {
    const auto n = static_cast<Index>(tasks.size());
    return from_adjacency(std::move(tasks), Matrix::Zero(n, n));
}

TaskGraph TaskGraph::from_adjacency(std::vector<std::string> tasks, Matrix adjacency) {
    TaskGraph g;
    g.tasks = std::move(tasks);
    g.adjacency = std::move(adjacency);
    g.degree.resize(g.tasks.size());
    for (Index i = 0; i < g.adjacency.rows(); ++i) {
        g.degree[i] = static_cast<int>(g.adjacency.row(i).sum());
    }
    g.validate();
    return g;
}

bool operator==(const TaskGraph& a, const TaskGraph& b) {
    return a.tasks == b.tasks && a.adjacency == b.adjacency && a.degree == b.degree;
}

TaskGraph build_line_graph(const RoadNetwork& network) {
    if (network.edges.empty()) {
        throw InputError("no tasks: road network has no edges");
    }
    network.validate();

    std::vector<const RoadEdge*> sorted;
    sorted.reserve(network.edges.size());
    for (const auto& e : network.edges) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const RoadEdge* x, const RoadEdge* y) { return x->road < y->road; });

    std::vector<std::string> tasks;
    std::map<std::string, std::vector<Index>> incident;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        tasks.push_back(sorted[i]->road);
        incident[sorted[i]->a].push_back(static_cast<Index>(i));
        incident[sorted[i]->b].push_back(static_cast<Index>(i));
    }

    const auto n = static_cast<Index>(tasks.size());
    Matrix adjacency = Matrix::Zero(n, n);
    for (const auto& [vertex, roads] : incident) {
        for (Index i : roads) {
            for (Index j : roads) {
                if (i != j) adjacency(i, j) = 1.0;
            }
        }
    }
    return TaskGraph::from_adjacency(std::move(tasks), std::move(adjacency));
}

RoadNetwork parse_edge_list(std::istream& in, const std::string& source) {
    RoadNetwork net;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        RoadEdge e;
        std::string extra;
        if (!(fields >> e.a >> e.b >> e.road) || (fields >> extra)) {
            throw InputError(source + ":" + std::to_string(line_no) +
                             ": expected '<vertexA> <vertexB> <roadId>'");
        }
        net.vertices.insert(e.a);
        net.vertices.insert(e.b);
        net.edges.push_back(std::move(e));
    }
    return net;
}

RoadNetwork read_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open edge list: " + path);
    return parse_edge_list(in, path);
}

void write_task_edges(std::ostream& out, const TaskGraph& graph) {
    out << "# task graph: <roadA> <roadB>\n";
    for (std::size_t i = 0; i < graph.size(); ++i) {
        for (std::size_t j = i + 1; j < graph.size(); ++j) {
            if (graph.adjacency(static_cast<Index>(i), static_cast<Index>(j)) != 0.0) {
                out << graph.tasks[i] << ' ' << graph.tasks[j] << '\n';
            }
        }
    }
}

}  // namespace titan
