#pragma once

#include "titan/common.hpp"

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace titan {

/// One arterial road segment joining two intersections.
struct RoadEdge {
    std::string a;
    std::string b;
    std::string road;
};

/// Undirected road network: intersections are vertices, road segments are edges.
struct RoadNetwork {
    std::set<std::string> vertices;
    std::vector<RoadEdge> edges;

    /// Throws InputError on self loops, duplicate road ids or unknown vertices.
    void validate() const;
};

/// Tasks (roads) and their 0/1 connectivity. Task index = position in `tasks`.
struct TaskGraph {
    std::vector<std::string> tasks;
    Matrix adjacency;
    std::vector<int> degree;

    std::size_t size() const { return tasks.size(); }

    /// Index of a road, or throws InputError.
    std::size_t index_of(const std::string& road) const;

    /// Checks symmetry, zero diagonal, 0/1 entries and degree consistency.
    void validate() const;

    /// Graph without any edges.
    static TaskGraph isolated(std::vector<std::string> tasks);

    /// Builds degree from `adjacency` and validates.
    static TaskGraph from_adjacency(std::vector<std::string> tasks, Matrix adjacency);
};

bool operator==(const TaskGraph& a, const TaskGraph& b);

/// Line graph of the road network. Tasks are sorted road ids; two roads are
/// adjacent when they share an endpoint.
TaskGraph build_line_graph(const RoadNetwork& network);

/// Parses `<vertexA> <vertexB> <roadId>` lines. `#` lines and blank lines are skipped.
RoadNetwork parse_edge_list(std::istream& in, const std::string& source = "<stream>");
RoadNetwork read_edge_list(const std::string& path);

/// Writes the task-level edge list (`<roadA> <roadB>` per undirected edge, i < j).
void write_task_edges(std::ostream& out, const TaskGraph& graph);

}  // namespace titan
