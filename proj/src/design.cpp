#include "synergy/design.hpp"

#include <algorithm>
#include <sstream>

#include "synergy/errors.hpp"

namespace synergy {

namespace {

std::string join(std::span<const std::string> items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

TableSpec view_table_spec(const viewselect::ViewDef& v) {
    TableSpec spec;
    spec.name = v.name;
    spec.kind = TableKind::View;
    spec.columns = v.view.attributes;
    spec.key = v.view.key;
    return spec;
}

TableSpec lock_table_spec(const RelationDef& root) {
    TableSpec spec;
    spec.name = lock_table_name(root.name);
    spec.kind = TableKind::Lock;
    for (const auto& k : root.primary_key) spec.columns.push_back(*root.find_attribute(k));
    spec.columns.push_back({kLockColumn, AttrType::Int});
    spec.key = root.primary_key;
    return spec;
}

std::string index_line(const IndexDef& ix) {
    return ix.name + " ON " + ix.base + " (" + join(ix.indexed_on, ", ") + ") COVERING (" +
           join(ix.attributes, ", ") + ")";
}

}  // namespace

std::vector<const IndexDef*> Design::indexes_on(std::string_view base) const {
    std::vector<const IndexDef*> out;
    for (const auto* list : {&schema.indexes, &view_indexes, &maintenance_indexes}) {
        for (const auto& ix : *list) {
            if (ix.base == base) out.push_back(&ix);
        }
    }
    return out;
}

const IndexDef* Design::find_index(std::string_view name) const {
    for (const auto* list : {&schema.indexes, &view_indexes, &maintenance_indexes}) {
        for (const auto& ix : *list) {
            if (ix.name == name) return &ix;
        }
    }
    return nullptr;
}

sql::Statement Design::rewrite(const sql::Statement& q) const {
    return viewselect::rewrite_with(q, generation.trees, selection.views);
}

Design build_design(SchemaDef schema, std::vector<sql::Statement> workload) {
    schema.validate();
    Design d;
    d.schema = std::move(schema);
    d.input = std::move(workload);
    d.baseline = baseline_transform(d.schema, d.input);
    d.generation = viewgen::generate(d.schema, d.baseline.workload);
    d.selection = viewselect::select_views(d.baseline.workload, d.generation.trees, d.schema);

    std::vector<const viewselect::ViewDef*> per_query_views;
    for (std::size_t i = 0; i < d.baseline.workload.size(); ++i) {
        const auto& q = d.baseline.workload[i];
        auto qs = std::find_if(d.selection.per_query.begin(), d.selection.per_query.end(),
                               [&](const viewselect::QuerySelection& s) { return s.query == i; });
        if (qs == d.selection.per_query.end()) {
            d.rewritten.push_back(q);
            continue;
        }
        std::vector<const viewselect::ViewDef*> use;
        for (const auto& name : qs->views) use.push_back(d.selection.find(name));
        d.rewritten.push_back(viewselect::rewrite_query(q, use));
    }
    d.view_indexes = viewselect::recommend_view_indexes(d.rewritten, d.selection.views);
    d.maintenance_indexes =
        viewselect::recommend_maintenance_indexes(d.selection.views, d.baseline.workload, d.schema);

    d.catalog = d.baseline.catalog;
    for (const auto& v : d.selection.views) d.catalog.add(view_table_spec(v));
    for (const auto* list : {&d.view_indexes, &d.maintenance_indexes}) {
        for (const auto& ix : *list) d.catalog.add(index_table_spec(ix, d.catalog.at(ix.base)));
    }
    for (const auto& r : d.schema.roots) d.catalog.add(lock_table_spec(d.schema.relation(r)));
    return d;
}

std::string render_report(const Design& d) {
    std::ostringstream out;
    const auto& g = d.generation;
    const auto& work = d.baseline.workload;

    out << "# roots\n" << join(d.schema.roots, ", ") << "\n\n";
    out << "# schema graph\n";
    for (const auto& e : g.graph.edges) out << e.describe() << " w=" << viewgen::heuristic_weight(e, work) << "\n";
    out << "\n# dag\n";
    for (const auto& e : g.dag.dag.edges) out << "kept " << e.describe() << "\n";
    for (const auto& e : g.dag.dropped) out << "dropped " << e.describe() << "\n";
    out << "\n# topological order\n" << join(g.order, ", ") << "\n";
    out << "\n# root assignment\n";
    for (const auto& a : g.assignment.assignments) {
        out << a.relation << " -> " << (a.root ? *a.root : "(unassigned)") << "\n";
        for (const auto& wp : a.ranked) {
            out << "  w=" << wp.weight << " " << wp.path.signature();
            if (a.chosen && wp.path == *a.chosen) {
                out << " chosen";
            } else if (!wp.admissible) {
                out << " inadmissible";
            }
            out << "\n";
        }
    }
    out << "unassigned: " << (g.assignment.unassigned.empty() ? "(none)" : join(g.assignment.unassigned, ", "))
        << "\n";
    out << "\n# rooted trees\n";
    for (const auto& t : g.trees) out << t.render();
    out << "\n# candidate views\n";
    for (const auto& v : g.candidates) {
        out << v.name() << " key (" << join(v.key, ", ") << ")";
        if (!v.ambiguous.empty()) out << " ambiguous (" << join(v.ambiguous, ", ") << ")";
        out << "\n";
    }
    out << "\n# selected views\n";
    for (const auto& v : d.selection.views) {
        out << v.name << " queries";
        for (auto q : v.provenance) out << " q" << q + 1;
        out << "\n";
    }
    out << "\n# rewritten workload\n";
    for (std::size_t i = 0; i < d.rewritten.size(); ++i) {
        out << "q" << i + 1 << ": " << sql::render_statement(d.rewritten[i]) << "\n";
    }
    out << "\n# view indexes\n";
    for (const auto& ix : d.view_indexes) out << index_line(ix) << "\n";
    out << "\n# maintenance indexes\n";
    for (const auto& ix : d.maintenance_indexes) out << index_line(ix) << "\n";
    out << "\n# rejected\n";
    for (const auto& r : d.baseline.rejected) {
        out << sql::render_statement(r.statement) << " -- " << r.reason << "\n";
    }
    for (const auto& r : d.selection.rejected) out << "q" << r.query + 1 << " -- " << r.reason << "\n";
    return out.str();
}

std::string render_view_ddl(const Design& d) {
    std::ostringstream out;
    for (const auto& v : d.selection.views) {
        std::vector<std::string> cols;
        for (std::size_t i = 0; i < v.view.attributes.size(); ++i) {
            const auto& a = v.view.attributes[i];
            cols.push_back(v.view.attribute_source[i] + "." + a.name + " " + std::string(type_name(a.type)));
        }
        out << "CREATE VIEW " << v.name << " (" << join(cols, ", ") << ") KEY (" << join(v.view.key, ", ")
            << ") AS " << v.view.path.signature() << ";\n";
    }
    return out.str();
}

std::string render_rewritten_workload(const Design& d) {
    std::string out;
    for (const auto& s : d.rewritten) out += sql::render_statement(s) + "\n";
    return out;
}

std::string render_indexes(const Design& d) {
    std::string out;
    for (const auto* list : {&d.view_indexes, &d.maintenance_indexes}) {
        for (const auto& ix : *list) out += index_line(ix) + "\n";
    }
    return out;
}

}  // namespace synergy
