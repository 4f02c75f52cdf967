#include "synergy/maintenance.hpp"

#include <algorithm>

#include "synergy/errors.hpp"

namespace synergy::maintenance {

namespace {

const Value& bound_value(const sql::Operand& op, std::string_view column) {
    if (std::holds_alternative<sql::Placeholder>(op)) {
        throw InvalidStatement("unbound placeholder for " + std::string(column));
    }
    return std::get<Value>(op);
}

void check_type(const RelationDef& rel, const std::string& column, const Value& v) {
    const Attribute* a = rel.find_attribute(column);
    if (!a) throw InvalidStatement(rel.name + " has no attribute " + column);
    if (!has_type(v, a->type)) {
        throw InvalidStatement(rel.name + "." + column + " expects " + std::string(type_name(a->type)) + ", got " +
                               sql_literal(v));
    }
}

std::optional<storage::RowKey> try_key_of(const TableSpec& spec, const Tuple& t) {
    std::vector<Value> values;
    for (const auto& k : spec.key) {
        auto it = t.find(k);
        if (it == t.end() || is_null(it->second)) return std::nullopt;
        const Attribute* col = spec.find_column(k);
        if (col && !has_type(it->second, col->type)) return std::nullopt;
        values.push_back(it->second);
    }
    return storage::encode_key(values);
}

std::vector<storage::Cell> cells_for(const TableSpec& spec, const Tuple& t) {
    std::vector<storage::Cell> cells;
    for (const auto& c : spec.columns) {
        auto it = t.find(c.name);
        if (it != t.end() && !is_null(it->second)) cells.push_back({c.name, it->second});
    }
    return cells;
}

bool same_columns(const TableSpec& spec, const Tuple& a, const Tuple& b) {
    for (const auto& c : spec.columns) {
        auto x = a.find(c.name);
        auto y = b.find(c.name);
        bool hx = x != a.end() && !is_null(x->second);
        bool hy = y != b.end() && !is_null(y->second);
        if (hx != hy || (hx && x->second != y->second)) return false;
    }
    return true;
}

}  // namespace

std::optional<storage::Row> StoreReader::get(std::string_view table, std::string_view key) {
    return store_.get(table, key);
}

std::vector<storage::Row> StoreReader::scan(std::string_view table, const storage::KeyRange& range) {
    return store_.table(table).scan_all(range);
}

Tuple row_tuple(const storage::Row& row) {
    Tuple t;
    for (auto& c : row.cells()) t.emplace(std::move(c.column), std::move(c.value));
    return t;
}

std::vector<storage::Cell> tuple_cells(const Tuple& t) {
    std::vector<storage::Cell> cells;
    for (const auto& [k, v] : t) {
        if (!is_null(v)) cells.push_back({k, v});
    }
    return cells;
}

storage::RowKey key_of(const TableSpec& spec, const Tuple& t) {
    std::vector<Value> values;
    std::vector<AttrType> types;
    for (const auto& k : spec.key) {
        auto it = t.find(k);
        if (it == t.end() || is_null(it->second)) throw KeyError(spec.name + ": missing key attribute " + k);
        values.push_back(it->second);
        const Attribute* col = spec.find_column(k);
        types.push_back(col ? col->type : type_of(it->second).value());
    }
    return storage::encode_key(values, types);
}

std::pair<storage::RowKey, std::vector<storage::Cell>> index_row(const TableSpec& index, const Tuple& source) {
    return {key_of(index, source), cells_for(index, source)};
}

bool insert_applies(const viewselect::ViewDef& view, std::string_view relation) {
    return view.view.last() == relation;
}

bool delete_applies(const viewselect::ViewDef& view, std::string_view relation) {
    return view.view.last() == relation;
}

bool update_applies(const viewselect::ViewDef& view, std::string_view relation) {
    return view.view.path.contains(relation);
}

Tuple insert_tuple(const RelationDef& relation, const sql::Statement& insert) {
    Tuple t;
    for (const auto& v : insert.values) {
        const Value& value = bound_value(v.value, v.column);
        check_type(relation, v.column, value);
        if (!t.emplace(v.column, value).second) throw InvalidStatement("column " + v.column + " given twice");
    }
    for (const auto& k : relation.primary_key) {
        if (!t.count(k)) throw InvalidStatement("insert into " + relation.name + " lacks key attribute " + k);
    }
    return t;
}

Tuple key_tuple(const RelationDef& relation, const sql::Statement& stmt) {
    Tuple t;
    for (const auto& k : relation.primary_key) {
        auto it = std::find_if(stmt.filters.begin(), stmt.filters.end(), [&](const sql::Filter& f) {
            return f.op == sql::CompareOp::Eq && f.column.name == k;
        });
        if (it == stmt.filters.end()) {
            throw InvalidStatement("statement on " + relation.name + " does not fix key attribute " + k);
        }
        const Value& v = bound_value(it->operand, k);
        check_type(relation, k, v);
        t.emplace(k, v);
    }
    return t;
}

std::optional<Tuple> read_parent(const SchemaEdge& edge, const Tuple& child, Reader& reader) {
    std::vector<Value> values;
    for (const auto& fk : edge.child_fk) {
        auto it = child.find(fk);
        if (it == child.end() || is_null(it->second)) return std::nullopt;
        values.push_back(it->second);
    }
    auto row = reader.get(edge.parent, storage::encode_key(values));
    if (!row) return std::nullopt;
    return row_tuple(*row);
}

std::optional<Tuple> build_insert_view_tuple(const viewselect::ViewDef& view, const Tuple& inserted,
                                             Reader& reader) {
    const auto& edges = view.view.path.edges;
    Tuple result = inserted;
    Tuple child = inserted;
    for (std::size_t i = edges.size(); i-- > 0;) {
        auto parent = read_parent(edges[i], child, reader);
        if (!parent) return std::nullopt;
        // earlier relations in the path own shared names
        for (const auto& [k, v] : *parent) result[k] = v;
        child = std::move(*parent);
    }
    Tuple out;
    for (const auto& a : view.view.attributes) {
        auto it = result.find(a.name);
        if (it != result.end()) out.emplace(a.name, it->second);
    }
    return out;
}

std::vector<IndexKey> build_delete_index_keys(const Design& design, const viewselect::ViewDef& view,
                                              const storage::RowKey& view_key, Reader& reader) {
    std::vector<IndexKey> out;
    auto indexes = design.indexes_on(view.name);
    if (indexes.empty()) return out;
    auto row = reader.get(view.name, view_key);
    if (!row) return out;
    Tuple t = row_tuple(*row);
    for (const auto* ix : indexes) {
        if (auto key = try_key_of(design.catalog.at(ix->name), t)) out.push_back({ix->name, *key});
    }
    return out;
}

Tuple update_assignments(const RelationDef& relation, const sql::Statement& update) {
    Tuple t;
    for (const auto& a : update.assignments) {
        if (relation.is_key_attribute(a.column) || relation.is_foreign_key_attribute(a.column)) {
            throw UnsupportedUpdate("update of key attribute " + relation.name + "." + a.column);
        }
        const Value& v = bound_value(a.value, a.column);
        check_type(relation, a.column, v);
        t[a.column] = v;
    }
    return t;
}

std::vector<IndexChange> index_changes(const Design& design, std::string_view source, const Tuple& before,
                                       const Tuple& after) {
    std::vector<IndexChange> out;
    for (const auto* ix : design.indexes_on(source)) {
        const TableSpec& spec = design.catalog.at(ix->name);
        if (same_columns(spec, before, after)) continue;
        auto old_key = try_key_of(spec, before);
        auto new_key = try_key_of(spec, after);
        if (!old_key && !new_key) continue;
        IndexChange c;
        c.index = ix->name;
        c.old_key = std::move(old_key);
        c.new_key = std::move(new_key);
        if (new_key) c.cells = cells_for(spec, after);
        out.push_back(std::move(c));
    }
    return out;
}

UpdatePlan plan_update_rows(const Design& design, const viewselect::ViewDef& view, std::string_view relation,
                            const Tuple& base_key, const Tuple& assignments, Reader& reader) {
    UpdatePlan plan;
    plan.view = view.name;
    if (!update_applies(view, relation)) return plan;
    const TableSpec& view_spec = design.catalog.at(view.name);
    const auto& pk = design.schema.relation(relation).primary_key;

    std::vector<storage::Row> rows;
    if (view.view.last() == relation) {
        plan.access = UpdatePlan::Access::ViewKey;
        if (auto row = reader.get(view.name, key_of(view_spec, base_key))) rows.push_back(std::move(*row));
    } else if (const IndexDef* mx = design.find_index(viewselect::maintenance_index_name(view, relation))) {
        plan.access = UpdatePlan::Access::MaintenanceIndex;
        const TableSpec& mx_spec = design.catalog.at(mx->name);
        std::vector<Value> prefix;
        for (const auto& k : pk) prefix.push_back(base_key.at(k));
        std::vector<storage::Row> entries;
        if (prefix.size() == mx_spec.key.size()) {
            if (auto e = reader.get(mx->name, storage::encode_key(prefix))) entries.push_back(std::move(*e));
        } else {
            entries = reader.scan(mx->name, storage::KeyRange::prefix(storage::encode_key_prefix(prefix)));
        }
        for (const auto& e : entries) {
            if (auto row = reader.get(view.name, key_of(view_spec, row_tuple(e)))) rows.push_back(std::move(*row));
        }
    } else {
        plan.access = UpdatePlan::Access::FullScan;
        for (auto& row : reader.scan(view.name, storage::KeyRange::all())) {
            bool hit = std::all_of(pk.begin(), pk.end(), [&](const std::string& k) { return row.get(k) == base_key.at(k); });
            if (hit) rows.push_back(std::move(row));
        }
    }

    for (const auto& row : rows) {
        ViewRowUpdate u;
        u.key = row.key();
        u.before = row_tuple(row);
        u.after = u.before;
        for (const auto& [attr, value] : assignments) {
            const std::string* src = view.view.source_of(attr);
            if (!src || *src != relation) continue;
            u.after[attr] = value;
            u.changed.push_back({attr, value});
        }
        u.indexes = index_changes(design, view.name, u.before, u.after);
        plan.rows.push_back(std::move(u));
    }
    return plan;
}

}  // namespace synergy::maintenance
