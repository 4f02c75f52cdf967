#include "synergy/verify.hpp"

#include <map>
#include <sstream>
#include <unordered_map>

namespace synergy {

namespace {

using Cells = std::map<std::string, Value, std::less<>>;
using Rows = std::map<storage::RowKey, Cells>;

Cells cells_of(const storage::Row& row) {
    Cells out;
    for (auto& c : row.cells()) {
        if (!is_null(c.value)) out.emplace(std::move(c.column), std::move(c.value));
    }
    return out;
}

// nullopt when a component is absent.
std::optional<storage::RowKey> encode(const Cells& row, const std::vector<std::string>& columns) {
    std::vector<Value> values;
    for (const auto& c : columns) {
        auto it = row.find(c);
        if (it == row.end()) return std::nullopt;
        values.push_back(it->second);
    }
    return storage::encode_key(values);
}

std::vector<Cells> load(const storage::Store& store, std::string_view table) {
    std::vector<Cells> out;
    auto scan = store.scan(table);
    while (auto row = scan.next()) out.push_back(cells_of(*row));
    return out;
}

// Inner join of the path's relations; each result is one row per relation.
std::vector<std::vector<const Cells*>> join_path(const viewgen::Path& path,
                                                 const std::map<std::string, std::vector<Cells>>& base) {
    std::vector<std::vector<const Cells*>> partial;
    for (const auto& row : base.at(path.relations.front())) partial.push_back({&row});
    for (std::size_t i = 0; i < path.edges.size(); ++i) {
        const SchemaEdge& e = path.edges[i];
        std::unordered_multimap<std::string, const Cells*> children;
        for (const auto& row : base.at(path.relations[i + 1])) {
            if (auto k = encode(row, e.child_fk)) children.emplace(*k, &row);
        }
        std::vector<std::vector<const Cells*>> next;
        for (const auto& p : partial) {
            auto k = encode(*p.back(), e.parent_key);
            if (!k) continue;
            auto [lo, hi] = children.equal_range(*k);
            for (auto it = lo; it != hi; ++it) {
                auto extended = p;
                extended.push_back(it->second);
                next.push_back(std::move(extended));
            }
        }
        partial = std::move(next);
    }
    return partial;
}

Rows expected_view(const viewselect::ViewDef& view, const TableSpec& spec,
                   const std::map<std::string, std::vector<Cells>>& base) {
    const auto& cv = view.view;
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < cv.relations().size(); ++i) position[cv.relations()[i]] = i;
    Rows out;
    for (const auto& combo : join_path(cv.path, base)) {
        Cells row;
        for (std::size_t a = 0; a < cv.attributes.size(); ++a) {
            const Cells& src = *combo[position.at(cv.attribute_source[a])];
            auto it = src.find(cv.attributes[a].name);
            if (it != src.end()) row.emplace(it->first, it->second);
        }
        if (auto key = encode(row, spec.key)) out[*key] = std::move(row);
    }
    return out;
}

Rows expected_index(const TableSpec& index, const Rows& source) {
    Rows out;
    for (const auto& [_, src] : source) {
        auto key = encode(src, index.key);
        if (!key) continue;  // sparse: no index row
        Cells row;
        for (const auto& c : index.columns) {
            auto it = src.find(c.name);
            if (it != src.end()) row.emplace(it->first, it->second);
        }
        out[*key] = std::move(row);
    }
    return out;
}

TableDiff diff(const TableSpec& spec, const Rows& expected, const storage::Store& store) {
    TableDiff d;
    d.table = spec.name;
    d.kind = spec.kind;
    d.expected = expected.size();
    auto scan = store.scan(spec.name);
    std::size_t matched = 0;
    while (auto row = scan.next()) {
        ++d.actual;
        if (row->dirty()) ++d.dirty;
        auto it = expected.find(row->key());
        if (it == expected.end()) {
            ++d.extra;
            continue;
        }
        ++matched;
        if (cells_of(*row) != it->second) ++d.mismatched;
    }
    d.missing = d.expected - matched;
    return d;
}

}  // namespace

std::size_t VerifyReport::total_diffs() const {
    std::size_t n = 0;
    for (const auto& t : tables) n += t.diffs();
    return n;
}

std::size_t VerifyReport::total_dirty() const {
    std::size_t n = 0;
    for (const auto& t : tables) n += t.dirty;
    return n;
}

std::string VerifyReport::render() const {
    std::ostringstream out;
    out << "table,kind,expected,actual,missing,extra,mismatched,dirty\n";
    for (const auto& t : tables) {
        out << t.table << ',' << table_kind_name(t.kind) << ',' << t.expected << ',' << t.actual << ','
            << t.missing << ',' << t.extra << ',' << t.mismatched << ',' << t.dirty << '\n';
    }
    out << (ok() ? "OK" : "FAIL") << ": " << total_diffs() << " diffs, " << total_dirty() << " dirty\n";
    return out.str();
}

VerifyReport verify_store(const Design& design, const storage::Store& store) {
    VerifyReport report;
    std::map<std::string, std::vector<Cells>> base;
    std::map<std::string, Rows> sources;  // base tables and expected views, by key
    for (const auto& r : design.schema.relations) {
        const TableSpec& spec = design.catalog.at(r.name);
        auto rows = load(store, r.name);
        Rows keyed;
        for (const auto& row : rows) {
            if (auto k = encode(row, spec.key)) keyed[*k] = row;
        }
        sources[r.name] = std::move(keyed);
        base[r.name] = std::move(rows);

        // Base tables are their own truth; only surviving marks count.
        TableDiff d;
        d.table = r.name;
        d.kind = TableKind::Base;
        for (auto scan = store.scan(r.name); auto row = scan.next();) {
            ++d.actual;
            if (row->dirty()) ++d.dirty;
        }
        d.expected = d.actual;
        report.tables.push_back(d);
    }
    for (const auto& view : design.views()) {
        const TableSpec& spec = design.catalog.at(view.name);
        Rows expected = expected_view(view, spec, base);
        report.tables.push_back(diff(spec, expected, store));
        sources[view.name] = std::move(expected);
    }
    for (const auto& spec : design.catalog.tables()) {
        if (spec.kind != TableKind::Index) continue;
        report.tables.push_back(diff(spec, expected_index(spec, sources.at(spec.source)), store));
    }
    return report;
}

}  // namespace synergy
