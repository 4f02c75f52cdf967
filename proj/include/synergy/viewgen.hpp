#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synergy/schema.hpp"
#include "synergy/sql.hpp"

namespace synergy::viewgen {

// A directed path through the schema graph; edges[i] joins relations[i] to
// relations[i + 1].
struct Path {
    std::vector<std::string> relations;
    std::vector<SchemaEdge> edges;

    bool operator==(const Path&) const = default;
    const std::string& first() const { return relations.front(); }
    const std::string& last() const { return relations.back(); }
    bool contains(std::string_view relation) const;
    std::string signature() const;  // "A->B->C"
};

// Overlapping-joins heuristic. A query matches an edge once per alias pair
// whose join conditions contain every (PK, FK) attribute pair of the edge.
int heuristic_weight(const SchemaEdge& edge, std::span<const sql::Statement> workload);
int heuristic_weight(const Path& path, std::span<const sql::Statement> workload);

struct DagResult {
    SchemaGraph dag;
    std::vector<SchemaEdge> dropped;
};

// Keeps one maximum-weight edge per ordered relation pair. Ties keep the
// smallest FK name.
DagResult to_dag(const SchemaGraph& graph, std::span<const sql::Statement> workload);

// Kahn's algorithm; ready relations are taken by name. Throws CycleError.
std::vector<std::string> topological_order(const SchemaGraph& dag);

// All simple paths from `from` to `to` following edges of `graph`.
std::vector<Path> enumerate_paths(const SchemaGraph& graph, std::string_view from, std::string_view to);

struct RootedGraph {
    std::string root;
    std::vector<std::string> nodes;  // root first, then in insertion order
    std::vector<SchemaEdge> edges;

    bool has_node(std::string_view node) const;
    SchemaGraph as_graph() const;
};

struct WeightedPath {
    Path path;
    int weight = 0;
    bool admissible = false;
};

// Outcome of the root assignment for one non-root relation.
struct RootAssignment {
    std::string relation;
    std::optional<std::string> root;   // nullopt: unassigned
    std::vector<WeightedPath> ranked;  // in scan order
    std::optional<Path> chosen;
};

struct AssignmentResult {
    std::vector<RootedGraph> graphs;  // one per root, in Q order
    std::vector<RootAssignment> assignments;
    std::vector<std::string> unassigned;
};

// Paths rank by weight (descending), then length, then the root's position
// in `roots`, then signature.
AssignmentResult assign_to_roots(const SchemaGraph& dag, std::span<const std::string> order,
                                 std::span<const std::string> roots, std::span<const sql::Statement> workload);

class RootedTree {
public:
    RootedTree() = default;
    explicit RootedTree(std::string root);

    const std::string& root() const { return root_; }
    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<SchemaEdge>& edges() const { return edges_; }

    bool has_node(std::string_view node) const;
    // Edge into `node`, or nullptr for the root and for foreign nodes.
    const SchemaEdge* parent_edge(std::string_view node) const;
    std::vector<const SchemaEdge*> child_edges(std::string_view node) const;
    // Unique root-to-node path.
    Path path_to(std::string_view node) const;
    // Path from `ancestor` down to `node`; nullopt when not an ancestor.
    std::optional<Path> path_between(std::string_view ancestor, std::string_view node) const;

    // Adds a path starting at a node already in the tree. Throws
    // std::logic_error if it would give a node a second parent.
    void add_path(const Path& path);

    std::string render() const;  // indented outline

private:
    std::string root_;
    std::vector<std::string> nodes_;
    std::vector<SchemaEdge> edges_;
};

// Processes non-root relations in reverse topological order, adding the
// heaviest path that agrees with the edges already in the tree.
RootedTree to_rooted_tree(const RootedGraph& rg, std::span<const std::string> order,
                          std::span<const sql::Statement> workload);

struct CandidateView {
    Path path;
    std::vector<Attribute> attributes;          // union in path order, first occurrence wins
    std::vector<std::string> attribute_source;  // relation providing each attribute
    std::vector<std::string> key;               // PK(last relation)
    // Names occurring in several relations whose values the view's join
    // edges do not equate. Star projections and references to them cannot
    // be re-pointed at the view.
    std::vector<std::string> ambiguous;

    const std::vector<std::string>& relations() const { return path.relations; }
    const std::string& last() const { return path.last(); }
    bool has_attribute(std::string_view name) const;
    const std::string* source_of(std::string_view attribute) const;
    std::string name() const;  // V_<R1>_<R2>_...
};

CandidateView make_candidate_view(const Path& path, const SchemaDef& schema);

// Every path of two or more relations in every tree.
std::vector<CandidateView> enumerate_candidate_views(std::span<const RootedTree> trees, const SchemaDef& schema);

struct Generation {
    SchemaGraph graph;
    DagResult dag;
    std::vector<std::string> order;
    AssignmentResult assignment;
    std::vector<RootedTree> trees;  // in Q order
    std::vector<CandidateView> candidates;

    // Tree containing `relation`, or nullptr.
    const RootedTree* tree_of(std::string_view relation) const;
};

Generation generate(const SchemaDef& schema, std::span<const sql::Statement> workload);

}  // namespace synergy::viewgen
