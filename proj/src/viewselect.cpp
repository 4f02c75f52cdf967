#include "synergy/viewselect.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "synergy/errors.hpp"

namespace synergy::viewselect {

namespace {

using sql::ColumnRef;
using sql::Statement;

const sql::TableRef* table_of(const Statement& q, std::string_view relation) {
    for (const auto& t : q.tables) {
        if (t.relation == relation) return &t;
    }
    return nullptr;
}

bool join_links(const sql::JoinCondition& j, const std::string& pa, const std::string& pattr,
                const std::string& ca, const std::string& cattr) {
    return (j.left.qualifier == pa && j.left.name == pattr && j.right.qualifier == ca && j.right.name == cattr) ||
           (j.right.qualifier == pa && j.right.name == pattr && j.left.qualifier == ca && j.left.name == cattr);
}

// True when q joins the edge's relations on every attribute pair of the edge.
bool edge_in_query(const SchemaEdge& e, const Statement& q) {
    const sql::TableRef* p = table_of(q, e.parent);
    const sql::TableRef* c = table_of(q, e.child);
    if (!p || !c) return false;
    for (std::size_t i = 0; i < e.parent_key.size(); ++i) {
        bool found = std::any_of(q.joins.begin(), q.joins.end(), [&](const sql::JoinCondition& j) {
            return join_links(j, p->alias, e.parent_key[i], c->alias, e.child_fk[i]);
        });
        if (!found) return false;
    }
    return true;
}

void check_single_use(const Statement& q) {
    std::set<std::string> seen;
    for (const auto& t : q.tables) {
        if (!seen.insert(t.relation).second) {
            throw UnsupportedQuery("relation " + t.relation + " is used more than once");
        }
    }
}

}  // namespace

std::vector<viewgen::Path> select_views_for_query(const Statement& q, std::span<const viewgen::RootedTree> trees) {
    if (q.kind != sql::StatementKind::SelectJoin) return {};
    check_single_use(q);
    std::vector<viewgen::Path> out;
    for (const auto& tree : trees) {
        std::set<std::string> marked_nodes;
        std::set<std::string> marked_edges;  // by child: a tree edge is identified by its child
        for (const auto& e : tree.edges()) {
            if (edge_in_query(e, q)) {
                marked_edges.insert(e.child);
                marked_nodes.insert(e.parent);
                marked_nodes.insert(e.child);
            }
        }
        while (true) {
            const std::string* start = nullptr;
            for (const auto& n : tree.nodes()) {
                if (marked_nodes.count(n) && !marked_edges.count(n)) {
                    start = &n;
                    break;
                }
            }
            if (!start) break;
            viewgen::Path path;
            path.relations.push_back(*start);
            std::string cur = *start;
            while (true) {
                const SchemaEdge* next = nullptr;
                for (const auto* e : tree.child_edges(cur)) {
                    if (marked_edges.count(e->child) && marked_nodes.count(e->child)) {
                        next = e;
                        break;
                    }
                }
                if (!next) break;
                path.edges.push_back(*next);
                path.relations.push_back(next->child);
                cur = next->child;
            }
            for (const auto& n : path.relations) {
                marked_nodes.erase(n);
                for (const auto* e : tree.child_edges(n)) marked_edges.erase(e->child);
            }
            // a lone node joins nothing
            if (path.relations.size() >= 2) out.push_back(std::move(path));
        }
    }
    return out;
}

const ViewDef* Selection::find(std::string_view name) const {
    for (const auto& v : views) {
        if (v.name == name) return &v;
    }
    return nullptr;
}

Statement rewrite_query(const Statement& q, std::span<const ViewDef* const> selected) {
    if (selected.empty()) return q;
    check_single_use(q);

    std::map<std::string, std::size_t> view_of_alias;  // original alias -> selected index
    for (std::size_t i = 0; i < selected.size(); ++i) {
        for (const auto& rel : selected[i]->relations()) {
            const sql::TableRef* t = table_of(q, rel);
            if (!t) throw UnsupportedQuery("view " + selected[i]->name + " covers " + rel + ", absent from the query");
            if (!view_of_alias.emplace(t->alias, i).second) {
                throw UnsupportedQuery("relation " + rel + " covered by two views");
            }
        }
        if (q.is_star() && !selected[i]->view.ambiguous.empty()) {
            throw AmbiguityError("view " + selected[i]->name + " merges attribute " +
                                 selected[i]->view.ambiguous.front() + " of several relations");
        }
    }
    auto view_alias = [](std::size_t i) { return "v" + std::to_string(i + 1); };

    auto repoint = [&](const ColumnRef& ref) -> ColumnRef {
        auto it = view_of_alias.find(ref.qualifier);
        if (it == view_of_alias.end()) return ref;
        const ViewDef& v = *selected[it->second];
        const auto& amb = v.view.ambiguous;
        if (std::find(amb.begin(), amb.end(), ref.name) != amb.end()) {
            throw AmbiguityError("attribute " + ref.name + " is ambiguous in view " + v.name);
        }
        if (!v.view.has_attribute(ref.name)) {
            throw AmbiguityError("attribute " + ref.str() + " is not an attribute of view " + v.name);
        }
        return {view_alias(it->second), ref.name};
    };

    Statement out;
    out.kind = q.kind;
    std::set<std::size_t> placed;
    for (const auto& t : q.tables) {
        auto it = view_of_alias.find(t.alias);
        if (it == view_of_alias.end()) {
            out.tables.push_back(t);
        } else if (placed.insert(it->second).second) {
            out.tables.push_back({selected[it->second]->name, view_alias(it->second)});
        }
    }
    for (const auto& p : q.projections) out.projections.push_back(repoint(p));
    for (const auto& j : q.joins) {
        auto l = view_of_alias.find(j.left.qualifier);
        auto r = view_of_alias.find(j.right.qualifier);
        if (l != view_of_alias.end() && r != view_of_alias.end() && l->second == r->second) {
            const ViewDef& v = *selected[l->second];
            bool on_edge = false;
            for (const auto& e : v.view.path.edges) {
                const sql::TableRef* pt = table_of(q, e.parent);
                const sql::TableRef* ct = table_of(q, e.child);
                for (std::size_t k = 0; k < e.parent_key.size() && !on_edge; ++k) {
                    on_edge = join_links(j, pt->alias, e.parent_key[k], ct->alias, e.child_fk[k]);
                }
                if (on_edge) break;
            }
            if (!on_edge) {
                throw UnsupportedQuery("join " + j.left.str() + " = " + j.right.str() + " inside view " + v.name +
                                       " does not follow a view edge");
            }
            continue;
        }
        out.joins.push_back({repoint(j.left), repoint(j.right)});
    }
    for (const auto& f : q.filters) out.filters.push_back({repoint(f.column), f.op, f.operand});
    return out;
}

Selection select_views(std::span<const Statement> workload, std::span<const viewgen::RootedTree> trees,
                       const SchemaDef& schema) {
    Selection sel;
    for (std::size_t i = 0; i < workload.size(); ++i) {
        const Statement& q = workload[i];
        if (q.kind != sql::StatementKind::SelectJoin) continue;
        std::vector<ViewDef> chosen;
        try {
            for (const auto& p : select_views_for_query(q, trees)) {
                auto cv = viewgen::make_candidate_view(p, schema);
                std::string name = cv.name();
                chosen.push_back({std::move(cv), std::move(name), {}});
            }
            if (chosen.empty()) continue;
            for (const auto& v : chosen) {
                if (!v.view.ambiguous.empty()) {
                    throw AmbiguityError("view " + v.name + " merges attribute " + v.view.ambiguous.front() +
                                         " of several relations");
                }
            }
            std::vector<const ViewDef*> ptrs;
            for (const auto& v : chosen) ptrs.push_back(&v);
            rewrite_query(q, ptrs);
        } catch (const Error& e) {
            sel.rejected.push_back({i, e.what()});
            continue;
        }
        QuerySelection qs{i, {}};
        for (auto& v : chosen) {
            qs.views.push_back(v.name);
            auto it = std::find_if(sel.views.begin(), sel.views.end(),
                                   [&](const ViewDef& x) { return x.name == v.name; });
            if (it == sel.views.end()) {
                v.provenance.push_back(i);
                sel.views.push_back(std::move(v));
            } else {
                it->provenance.push_back(i);
            }
        }
        sel.per_query.push_back(std::move(qs));
    }
    return sel;
}

Statement rewrite_with(const Statement& q, std::span<const viewgen::RootedTree> trees,
                       std::span<const ViewDef> available) {
    if (q.kind != sql::StatementKind::SelectJoin) return q;
    try {
        std::vector<const ViewDef*> use;
        for (const auto& p : select_views_for_query(q, trees)) {
            for (const auto& v : available) {
                if (v.view.path == p) {
                    use.push_back(&v);
                    break;
                }
            }
        }
        return rewrite_query(q, use);
    } catch (const UnsupportedQuery&) {
        return q;
    } catch (const AmbiguityError&) {
        return q;
    }
}

std::vector<IndexDef> recommend_view_indexes(std::span<const Statement> rewritten, std::span<const ViewDef> views,
                                             std::span<const IndexDef> existing) {
    std::vector<IndexDef> out;
    auto indexed_first = [&](const std::string& view, const std::string& attr) {
        auto hit = [&](const IndexDef& ix) {
            return ix.base == view && !ix.indexed_on.empty() && ix.indexed_on.front() == attr;
        };
        return std::any_of(existing.begin(), existing.end(), hit) || std::any_of(out.begin(), out.end(), hit);
    };
    for (const auto& q : rewritten) {
        if (q.kind != sql::StatementKind::SelectJoin) continue;
        for (const auto& t : q.tables) {
            auto vit = std::find_if(views.begin(), views.end(), [&](const ViewDef& v) { return v.name == t.relation; });
            if (vit == views.end()) continue;
            const ViewDef& v = *vit;
            std::vector<const sql::Filter*> filters;
            for (const auto& f : q.filters) {
                if (q.resolve(f.column) == &t) filters.push_back(&f);
            }
            if (filters.empty()) continue;
            bool served = std::any_of(filters.begin(), filters.end(), [&](const sql::Filter* f) {
                return f->column.name == v.view.key.front() || indexed_first(v.name, f->column.name);
            });
            if (served) continue;
            std::sort(filters.begin(), filters.end(), [](const sql::Filter* a, const sql::Filter* b) {
                bool ea = a->op == sql::CompareOp::Eq;
                bool eb = b->op == sql::CompareOp::Eq;
                if (ea != eb) return ea;
                return a->column.name < b->column.name;
            });
            const std::string& attr = filters.front()->column.name;
            IndexDef ix;
            ix.name = "IX_" + v.name + "_" + attr;
            ix.base = v.name;
            for (const auto& a : v.view.attributes) ix.attributes.push_back(a.name);
            ix.indexed_on = {attr};
            out.push_back(std::move(ix));
        }
    }
    return out;
}

std::string maintenance_index_name(const ViewDef& view, std::string_view relation) {
    return "MX_" + view.name + "_" + std::string(relation);
}

std::vector<IndexDef> recommend_maintenance_indexes(std::span<const ViewDef> views,
                                                    std::span<const Statement> workload, const SchemaDef& schema) {
    std::set<std::string> updated;
    for (const auto& s : workload) {
        if (s.kind == sql::StatementKind::Update) updated.insert(s.target());
    }
    std::vector<IndexDef> out;
    for (const auto& v : views) {
        const auto& rels = v.relations();
        for (std::size_t i = 0; i + 1 < rels.size(); ++i) {
            if (!updated.count(rels[i])) continue;
            IndexDef ix;
            ix.name = maintenance_index_name(v, rels[i]);
            ix.base = v.name;
            ix.indexed_on = schema.relation(rels[i]).primary_key;
            ix.attributes = ix.indexed_on;
            out.push_back(std::move(ix));
        }
    }
    return out;
}

}  // namespace synergy::viewselect
