#include "synergy/viewgen.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

#include "synergy/errors.hpp"

namespace synergy::viewgen {

namespace {

bool contains(std::span<const std::string> list, std::string_view item) {
    return std::find(list.begin(), list.end(), item) != list.end();
}

// Number of alias pairs in `q` whose join conditions cover every attribute
// pair of `edge`.
int matches_in_query(const SchemaEdge& edge, const sql::Statement& q) {
    if (q.kind != sql::StatementKind::SelectJoin) return 0;
    int count = 0;
    for (const auto& p : q.tables) {
        if (p.relation != edge.parent) continue;
        for (const auto& c : q.tables) {
            if (c.relation != edge.child || c.alias == p.alias) continue;
            std::set<std::pair<std::string, std::string>> pairs;
            for (const auto& j : q.joins) {
                if (j.left.qualifier == p.alias && j.right.qualifier == c.alias) {
                    pairs.emplace(j.left.name, j.right.name);
                } else if (j.right.qualifier == p.alias && j.left.qualifier == c.alias) {
                    pairs.emplace(j.right.name, j.left.name);
                }
            }
            bool all = !edge.parent_key.empty();
            for (std::size_t i = 0; i < edge.parent_key.size() && all; ++i) {
                all = pairs.count({edge.parent_key[i], edge.child_fk[i]}) > 0;
            }
            if (all) ++count;
        }
    }
    return count;
}

}  // namespace

bool Path::contains(std::string_view relation) const {
    return viewgen::contains(relations, relation);
}

std::string Path::signature() const {
    std::string out;
    for (std::size_t i = 0; i < relations.size(); ++i) {
        if (i) out += "->";
        out += relations[i];
    }
    return out;
}

int heuristic_weight(const SchemaEdge& edge, std::span<const sql::Statement> workload) {
    int w = 0;
    for (const auto& q : workload) w += matches_in_query(edge, q);
    return w;
}

int heuristic_weight(const Path& path, std::span<const sql::Statement> workload) {
    int w = 0;
    for (const auto& e : path.edges) w += heuristic_weight(e, workload);
    return w;
}

DagResult to_dag(const SchemaGraph& graph, std::span<const sql::Statement> workload) {
    DagResult result;
    result.dag.nodes = graph.nodes;
    // winner per ordered pair, by index into graph.edges
    std::map<std::pair<std::string, std::string>, std::size_t> best;
    std::vector<int> weight(graph.edges.size());
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        const auto& e = graph.edges[i];
        weight[i] = heuristic_weight(e, workload);
        auto [it, fresh] = best.emplace(std::make_pair(e.parent, e.child), i);
        if (fresh) continue;
        const auto& cur = graph.edges[it->second];
        if (weight[i] > weight[it->second] || (weight[i] == weight[it->second] && e.fk_name < cur.fk_name)) {
            it->second = i;
        }
    }
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        const auto& e = graph.edges[i];
        if (best.at({e.parent, e.child}) == i) {
            result.dag.edges.push_back(e);
        } else {
            result.dropped.push_back(e);
        }
    }
    return result;
}

std::vector<std::string> topological_order(const SchemaGraph& dag) {
    std::map<std::string, int> indegree;
    for (const auto& n : dag.nodes) indegree[n];
    for (const auto& e : dag.edges) ++indegree[e.child];
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto& [n, d] : indegree) {
        if (d == 0) ready.push(n);
    }
    std::vector<std::string> order;
    while (!ready.empty()) {
        std::string n = ready.top();
        ready.pop();
        order.push_back(n);
        for (const auto* e : dag.out_edges(n)) {
            if (--indegree[e->child] == 0) ready.push(e->child);
        }
    }
    if (order.size() != indegree.size()) throw CycleError("schema graph is not acyclic");
    return order;
}

std::vector<Path> enumerate_paths(const SchemaGraph& graph, std::string_view from, std::string_view to) {
    std::vector<Path> out;
    Path current;
    current.relations.emplace_back(from);
    auto dfs = [&](auto&& self, const std::string& node) -> void {
        if (node == to && current.relations.size() > 1) {
            out.push_back(current);
            return;
        }
        for (const auto* e : graph.out_edges(node)) {
            if (current.contains(e->child)) continue;
            current.relations.push_back(e->child);
            current.edges.push_back(*e);
            self(self, e->child);
            current.relations.pop_back();
            current.edges.pop_back();
        }
    };
    if (from == to) {
        out.push_back(current);
        return out;
    }
    dfs(dfs, std::string(from));
    return out;
}

bool RootedGraph::has_node(std::string_view node) const { return contains(nodes, node); }

SchemaGraph RootedGraph::as_graph() const { return {nodes, edges}; }

AssignmentResult assign_to_roots(const SchemaGraph& dag, std::span<const std::string> order,
                                 std::span<const std::string> roots, std::span<const sql::Statement> workload) {
    AssignmentResult result;
    std::map<std::string, std::string> assigned;  // relation -> root
    for (const auto& r : roots) {
        if (!dag.has_node(r)) throw SchemaError("root " + r + " is not a relation of the schema");
        result.graphs.push_back({r, {r}, {}});
        assigned[r] = r;
    }
    auto root_rank = [&](const std::string& r) {
        return std::find(roots.begin(), roots.end(), r) - roots.begin();
    };

    for (const auto& rel : order) {
        if (contains(roots, rel)) continue;
        RootAssignment a;
        a.relation = rel;
        for (const auto& r : roots) {
            for (auto& p : enumerate_paths(dag, r, rel)) {
                int w = heuristic_weight(p, workload);
                a.ranked.push_back({std::move(p), w, false});
            }
        }
        std::sort(a.ranked.begin(), a.ranked.end(), [&](const WeightedPath& x, const WeightedPath& y) {
            if (x.weight != y.weight) return x.weight > y.weight;
            if (x.path.relations.size() != y.path.relations.size()) {
                return x.path.relations.size() < y.path.relations.size();
            }
            auto rx = root_rank(x.path.first());
            auto ry = root_rank(y.path.first());
            if (rx != ry) return rx < ry;
            return x.path.signature() < y.path.signature();
        });
        for (auto& wp : a.ranked) {
            const std::string& root = wp.path.first();
            bool ok = true;
            for (std::size_t i = 1; i < wp.path.relations.size() && ok; ++i) {
                const auto& n = wp.path.relations[i];
                if (contains(roots, n)) ok = false;
                auto it = assigned.find(n);
                if (it != assigned.end() && it->second != root) ok = false;
            }
            wp.admissible = ok;
        }
        for (auto& wp : a.ranked) {
            if (!wp.admissible) continue;
            const std::string& root = wp.path.first();
            a.chosen = wp.path;
            a.root = root;
            auto& g = result.graphs[root_rank(root)];
            for (const auto& n : wp.path.relations) {
                if (!g.has_node(n)) g.nodes.push_back(n);
                assigned[n] = root;
            }
            for (const auto& e : wp.path.edges) {
                if (std::find(g.edges.begin(), g.edges.end(), e) == g.edges.end()) g.edges.push_back(e);
            }
            break;
        }
        if (!a.root) result.unassigned.push_back(rel);
        result.assignments.push_back(std::move(a));
    }
    return result;
}

RootedTree::RootedTree(std::string root) : root_(std::move(root)) { nodes_.push_back(root_); }

bool RootedTree::has_node(std::string_view node) const { return contains(nodes_, node); }

const SchemaEdge* RootedTree::parent_edge(std::string_view node) const {
    for (const auto& e : edges_) {
        if (e.child == node) return &e;
    }
    return nullptr;
}

std::vector<const SchemaEdge*> RootedTree::child_edges(std::string_view node) const {
    std::vector<const SchemaEdge*> out;
    for (const auto& e : edges_) {
        if (e.parent == node) out.push_back(&e);
    }
    std::sort(out.begin(), out.end(), [](const SchemaEdge* a, const SchemaEdge* b) { return a->child < b->child; });
    return out;
}

Path RootedTree::path_to(std::string_view node) const {
    auto p = path_between(root_, node);
    if (!p) throw std::logic_error("relation " + std::string(node) + " is not in the tree of " + root_);
    return *p;
}

std::optional<Path> RootedTree::path_between(std::string_view ancestor, std::string_view node) const {
    if (!has_node(node)) return std::nullopt;
    Path p;
    std::string cur(node);
    p.relations.push_back(cur);
    while (cur != ancestor) {
        const SchemaEdge* e = parent_edge(cur);
        if (!e) return std::nullopt;
        p.edges.insert(p.edges.begin(), *e);
        cur = e->parent;
        p.relations.insert(p.relations.begin(), cur);
    }
    return p;
}

void RootedTree::add_path(const Path& path) {
    if (!has_node(path.first())) throw std::logic_error("path does not start inside the tree");
    for (const auto& e : path.edges) {
        if (const SchemaEdge* existing = parent_edge(e.child)) {
            if (*existing != e) throw std::logic_error("second parent for " + e.child);
            continue;
        }
        if (e.child == root_) throw std::logic_error("edge into the root " + root_);
        edges_.push_back(e);
        nodes_.push_back(e.child);
    }
}

std::string RootedTree::render() const {
    std::string out;
    auto walk = [&](auto&& self, const std::string& node, int depth) -> void {
        out += std::string(2 * depth, ' ');
        if (const SchemaEdge* e = parent_edge(node)) {
            out += node + " " + e->label() + "\n";
        } else {
            out += node + "\n";
        }
        for (const auto* c : child_edges(node)) self(self, c->child, depth + 1);
    };
    walk(walk, root_, 0);
    return out;
}

RootedTree to_rooted_tree(const RootedGraph& rg, std::span<const std::string> order,
                          std::span<const sql::Statement> workload) {
    RootedTree tree(rg.root);
    SchemaGraph g = rg.as_graph();
    std::vector<std::string> pending;
    for (const auto& n : order) {
        if (n != rg.root && rg.has_node(n)) pending.push_back(n);
    }
    while (!pending.empty()) {
        const std::string target = pending.back();
        std::optional<Path> best;
        int best_w = -1;
        for (auto& p : enumerate_paths(g, rg.root, target)) {
            // must agree with the parent edges already fixed in the tree
            bool consistent = true;
            for (const auto& e : p.edges) {
                if (const SchemaEdge* existing = tree.parent_edge(e.child); existing && *existing != e) {
                    consistent = false;
                    break;
                }
            }
            if (!consistent) continue;
            int w = heuristic_weight(p, workload);
            bool better = !best || w > best_w ||
                          (w == best_w && (p.relations.size() < best->relations.size() ||
                                           (p.relations.size() == best->relations.size() &&
                                            p.signature() < best->signature())));
            if (better) {
                best = std::move(p);
                best_w = w;
            }
        }
        if (!best) throw std::logic_error("no path from " + rg.root + " to " + target);
        tree.add_path(*best);
        std::erase_if(pending, [&](const std::string& n) { return best->contains(n); });
    }
    return tree;
}

bool CandidateView::has_attribute(std::string_view name) const {
    return std::any_of(attributes.begin(), attributes.end(), [&](const Attribute& a) { return a.name == name; });
}

const std::string* CandidateView::source_of(std::string_view attribute) const {
    for (std::size_t i = 0; i < attributes.size(); ++i) {
        if (attributes[i].name == attribute) return &attribute_source[i];
    }
    return nullptr;
}

std::string CandidateView::name() const {
    std::string out = "V";
    for (const auto& r : path.relations) out += "_" + r;
    return out;
}

CandidateView make_candidate_view(const Path& path, const SchemaDef& schema) {
    CandidateView v;
    v.path = path;
    std::map<std::string, std::vector<std::string>> owners;  // attribute -> relations
    for (const auto& rel : path.relations) {
        const RelationDef& r = schema.relation(rel);
        for (const auto& a : r.attributes) {
            owners[a.name].push_back(rel);
            if (v.has_attribute(a.name)) continue;
            v.attributes.push_back(a);
            v.attribute_source.push_back(rel);
        }
    }
    v.key = schema.relation(path.last()).primary_key;

    // union-find over (relation, attribute) equated by the view's edges
    std::map<std::pair<std::string, std::string>, std::pair<std::string, std::string>> parent;
    auto find = [&](std::pair<std::string, std::string> x) {
        while (parent.count(x) && parent[x] != x) x = parent[x];
        return x;
    };
    for (const auto& e : path.edges) {
        for (std::size_t i = 0; i < e.parent_key.size(); ++i) {
            auto a = find({e.parent, e.parent_key[i]});
            auto b = find({e.child, e.child_fk[i]});
            if (a != b) parent[b] = a;
        }
    }
    for (const auto& [attr, rels] : owners) {
        if (rels.size() < 2) continue;
        auto first = find({rels.front(), attr});
        for (std::size_t i = 1; i < rels.size(); ++i) {
            if (find({rels[i], attr}) != first) {
                v.ambiguous.push_back(attr);
                break;
            }
        }
    }
    return v;
}

std::vector<CandidateView> enumerate_candidate_views(std::span<const RootedTree> trees, const SchemaDef& schema) {
    std::vector<CandidateView> out;
    for (const auto& t : trees) {
        for (const auto& start : t.nodes()) {
            for (const auto& end : t.nodes()) {
                if (start == end) continue;
                if (auto p = t.path_between(start, end)) out.push_back(make_candidate_view(*p, schema));
            }
        }
    }
    return out;
}

const RootedTree* Generation::tree_of(std::string_view relation) const {
    for (const auto& t : trees) {
        if (t.has_node(relation)) return &t;
    }
    return nullptr;
}

Generation generate(const SchemaDef& schema, std::span<const sql::Statement> workload) {
    schema.validate();
    Generation g;
    g.graph = build_schema_graph(schema);
    g.dag = to_dag(g.graph, workload);
    g.order = topological_order(g.dag.dag);
    g.assignment = assign_to_roots(g.dag.dag, g.order, schema.roots, workload);
    for (const auto& rg : g.assignment.graphs) g.trees.push_back(to_rooted_tree(rg, g.order, workload));
    g.candidates = enumerate_candidate_views(g.trees, schema);
    return g;
}

}  // namespace synergy::viewgen
