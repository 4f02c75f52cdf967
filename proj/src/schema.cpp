#include "synergy/schema.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "synergy/errors.hpp"

namespace synergy {

namespace {

bool contains(std::span<const std::string> list, std::string_view item) {
    return std::find(list.begin(), list.end(), item) != list.end();
}

std::string join(std::span<const std::string> items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

}  // namespace

const Attribute* RelationDef::find_attribute(std::string_view attr) const {
    for (const auto& a : attributes) {
        if (a.name == attr) return &a;
    }
    return nullptr;
}

bool RelationDef::is_key_attribute(std::string_view attr) const { return contains(primary_key, attr); }

bool RelationDef::is_foreign_key_attribute(std::string_view attr) const {
    return std::any_of(foreign_keys.begin(), foreign_keys.end(),
                       [&](const ForeignKey& fk) { return contains(fk.attributes, attr); });
}

std::vector<std::string> index_key_attributes(const IndexDef& index,
                                              std::span<const std::string> base_key) {
    std::vector<std::string> key = index.indexed_on;
    for (const auto& k : base_key) {
        if (!contains(key, k)) key.push_back(k);
    }
    return key;
}

const RelationDef* SchemaDef::find(std::string_view relation) const {
    for (const auto& r : relations) {
        if (r.name == relation) return &r;
    }
    return nullptr;
}

const RelationDef& SchemaDef::relation(std::string_view relation) const {
    if (const auto* r = find(relation)) return *r;
    throw SchemaError("unknown relation: " + std::string(relation));
}

bool SchemaDef::is_root(std::string_view relation) const { return contains(roots, relation); }

void SchemaDef::validate() const {
    std::set<std::string> names;
    for (const auto& r : relations) {
        if (r.name.empty()) throw SchemaError("relation with empty name");
        if (!names.insert(r.name).second) throw SchemaError("duplicate relation: " + r.name);
        if (r.attributes.empty()) throw SchemaError("relation " + r.name + " has no attributes");
        std::set<std::string> attrs;
        for (const auto& a : r.attributes) {
            if (a.name.empty() || a.name == "_dirty") {
                throw SchemaError("relation " + r.name + ": invalid attribute name '" + a.name + "'");
            }
            if (!attrs.insert(a.name).second) {
                throw SchemaError("relation " + r.name + ": duplicate attribute " + a.name);
            }
        }
        if (r.primary_key.empty()) throw SchemaError("relation " + r.name + " has an empty primary key");
        std::set<std::string> pk;
        for (const auto& k : r.primary_key) {
            if (!attrs.count(k)) {
                throw SchemaError("relation " + r.name + ": primary key attribute " + k + " is not an attribute");
            }
            if (!pk.insert(k).second) {
                throw SchemaError("relation " + r.name + ": duplicate primary key attribute " + k);
            }
        }
    }
    for (const auto& r : relations) {
        std::set<std::string> fk_names;
        for (const auto& fk : r.foreign_keys) {
            std::string where = "relation " + r.name + ", foreign key " + fk.name;
            if (fk.name.empty()) throw SchemaError("relation " + r.name + ": foreign key without a name");
            if (!fk_names.insert(fk.name).second) throw SchemaError(where + ": duplicate name");
            const RelationDef* target = find(fk.references);
            if (!target) throw SchemaError(where + ": references unknown relation " + fk.references);
            if (fk.referenced_key != target->primary_key) {
                throw SchemaError(where + ": must reference the primary key of " + target->name);
            }
            if (fk.attributes.size() != target->primary_key.size()) {
                throw SchemaError(where + ": attribute count does not match PK(" + target->name + ")");
            }
            for (std::size_t i = 0; i < fk.attributes.size(); ++i) {
                const Attribute* a = r.find_attribute(fk.attributes[i]);
                if (!a) throw SchemaError(where + ": unknown attribute " + fk.attributes[i]);
                if (a->type != target->find_attribute(target->primary_key[i])->type) {
                    throw SchemaError(where + ": type of " + a->name + " does not match " +
                                      target->name + "." + target->primary_key[i]);
                }
            }
        }
    }
    std::set<std::string> index_names;
    for (const auto& ix : indexes) {
        if (!index_names.insert(ix.name).second) throw SchemaError("duplicate index: " + ix.name);
        if (names.count(ix.name)) throw SchemaError("index " + ix.name + " collides with a relation name");
        const RelationDef* base = find(ix.base);
        if (!base) throw SchemaError("index " + ix.name + ": unknown base relation " + ix.base);
        if (ix.indexed_on.empty()) throw SchemaError("index " + ix.name + ": empty indexed_on");
        for (const auto& a : ix.attributes) {
            if (!base->find_attribute(a)) {
                throw SchemaError("index " + ix.name + ": " + a + " is not an attribute of " + ix.base);
            }
        }
        for (const auto& a : ix.indexed_on) {
            if (!contains(ix.attributes, a)) {
                throw SchemaError("index " + ix.name + ": indexed attribute " + a + " is not covered");
            }
        }
    }
    std::set<std::string> root_names;
    for (const auto& root : roots) {
        if (!names.count(root)) throw SchemaError("root " + root + " is not a relation");
        if (!root_names.insert(root).second) throw SchemaError("duplicate root: " + root);
    }
    build_schema_graph(*this);
}

std::string SchemaEdge::label() const {
    auto part = [](const std::vector<std::string>& v) {
        return v.size() == 1 ? v.front() : "[" + join(v, ", ") + "]";
    };
    return "(" + part(parent_key) + ", " + part(child_fk) + ")";
}

std::string SchemaEdge::describe() const { return parent + "->" + child + " " + label(); }

bool SchemaGraph::has_node(std::string_view node) const { return contains(nodes, node); }

std::vector<const SchemaEdge*> SchemaGraph::out_edges(std::string_view node) const {
    std::vector<const SchemaEdge*> out;
    for (const auto& e : edges) {
        if (e.parent == node) out.push_back(&e);
    }
    return out;
}

std::vector<const SchemaEdge*> SchemaGraph::in_edges(std::string_view node) const {
    std::vector<const SchemaEdge*> out;
    for (const auto& e : edges) {
        if (e.child == node) out.push_back(&e);
    }
    return out;
}

SchemaGraph build_schema_graph(const SchemaDef& schema) {
    SchemaGraph graph;
    for (const auto& r : schema.relations) graph.nodes.push_back(r.name);
    for (const auto& r : schema.relations) {
        for (const auto& fk : r.foreign_keys) {
            if (!schema.find(fk.references)) {
                throw SchemaError("relation " + r.name + ", foreign key " + fk.name +
                                  ": references unknown relation " + fk.references);
            }
            graph.edges.push_back({fk.references, r.name, fk.referenced_key, fk.attributes, fk.name});
        }
    }

    // three-colour DFS
    std::map<std::string, int> colour;
    std::vector<std::string> stack;
    auto visit = [&](auto&& self, const std::string& node) -> void {
        colour[node] = 1;
        stack.push_back(node);
        for (const auto* e : graph.out_edges(node)) {
            int c = colour[e->child];
            if (c == 1) {
                auto it = std::find(stack.begin(), stack.end(), e->child);
                std::vector<std::string> cycle(it, stack.end());
                cycle.push_back(e->child);
                throw CycleError("circular reference: " + join(cycle, " -> "));
            }
            if (c == 0) self(self, e->child);
        }
        stack.pop_back();
        colour[node] = 2;
    };
    for (const auto& n : graph.nodes) {
        if (colour[n] == 0) visit(visit, n);
    }
    return graph;
}

namespace {

using nlohmann::json;

AttrType parse_type(const std::string& t, const std::string& where) {
    if (t == "int") return AttrType::Int;
    if (t == "string") return AttrType::String;
    throw SchemaError(where + ": unknown type '" + t + "' (expected int or string)");
}

std::vector<std::string> string_list(const json& j, const char* field, const std::string& where) {
    if (!j.contains(field)) return {};
    if (!j.at(field).is_array()) throw SchemaError(where + ": '" + field + "' must be an array");
    std::vector<std::string> out;
    for (const auto& item : j.at(field)) {
        if (!item.is_string()) throw SchemaError(where + ": '" + field + "' must contain strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

}  // namespace

SchemaDef parse_schema_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("invalid schema JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("relations")) {
        throw SchemaError("schema document must be an object with a 'relations' array");
    }
    SchemaDef schema;
    for (const auto& jr : doc.at("relations")) {
        RelationDef r;
        r.name = jr.value("name", "");
        std::string where = "relation " + r.name;
        if (!jr.contains("attrs")) throw SchemaError(where + ": missing 'attrs'");
        for (const auto& ja : jr.at("attrs")) {
            Attribute a;
            if (ja.is_array() && ja.size() == 2) {
                a.name = ja[0].get<std::string>();
                a.type = parse_type(ja[1].get<std::string>(), where);
            } else {
                a.name = ja.value("name", "");
                a.type = parse_type(ja.value("type", "int"), where);
            }
            r.attributes.push_back(std::move(a));
        }
        r.primary_key = string_list(jr, "pk", where);
        if (jr.contains("fks")) {
            for (const auto& jf : jr.at("fks")) {
                ForeignKey fk;
                fk.attributes = string_list(jf, "attrs", where);
                fk.references = jf.value("references", "");
                fk.name = jf.value("name", "");
                if (fk.name.empty()) fk.name = "fk_" + r.name + "_" + join(fk.attributes, "_");
                r.foreign_keys.push_back(std::move(fk));
            }
        }
        schema.relations.push_back(std::move(r));
    }
    // referenced keys resolve once every relation is known
    for (auto& r : schema.relations) {
        for (auto& fk : r.foreign_keys) {
            if (const auto* target = schema.find(fk.references)) fk.referenced_key = target->primary_key;
        }
    }
    if (doc.contains("indexes")) {
        for (const auto& ji : doc.at("indexes")) {
            IndexDef ix;
            ix.name = ji.value("name", "");
            ix.base = ji.value("base", "");
            std::string where = "index " + ix.name;
            ix.indexed_on = string_list(ji, "on", where);
            ix.attributes = string_list(ji, "attrs", where);
            if (ix.attributes.empty()) ix.attributes = ix.indexed_on;
            schema.indexes.push_back(std::move(ix));
        }
    }
    schema.roots = string_list(doc, "roots", "schema");
    schema.validate();
    return schema;
}

std::string schema_to_json(const SchemaDef& schema) {
    json doc;
    doc["relations"] = json::array();
    for (const auto& r : schema.relations) {
        json jr;
        jr["name"] = r.name;
        jr["attrs"] = json::array();
        for (const auto& a : r.attributes) {
            jr["attrs"].push_back({{"name", a.name}, {"type", std::string(type_name(a.type))}});
        }
        jr["pk"] = r.primary_key;
        jr["fks"] = json::array();
        for (const auto& fk : r.foreign_keys) {
            jr["fks"].push_back({{"name", fk.name}, {"attrs", fk.attributes}, {"references", fk.references}});
        }
        doc["relations"].push_back(std::move(jr));
    }
    doc["indexes"] = json::array();
    for (const auto& ix : schema.indexes) {
        doc["indexes"].push_back(
            {{"name", ix.name}, {"base", ix.base}, {"attrs", ix.attributes}, {"on", ix.indexed_on}});
    }
    doc["roots"] = schema.roots;
    return doc.dump(2) + "\n";
}

SchemaDef load_schema_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open schema file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_schema_json(buf.str());
}

std::string_view table_kind_name(TableKind kind) {
    switch (kind) {
        case TableKind::Base: return "base";
        case TableKind::View: return "view";
        case TableKind::Index: return "index";
        case TableKind::Lock: return "lock";
    }
    return "base";
}

const Attribute* TableSpec::find_column(std::string_view column) const {
    for (const auto& c : columns) {
        if (c.name == column) return &c;
    }
    return nullptr;
}

std::vector<AttrType> TableSpec::key_types() const {
    std::vector<AttrType> out;
    for (const auto& k : key) out.push_back(find_column(k)->type);
    return out;
}

void StoreCatalog::add(TableSpec spec) {
    if (find(spec.name)) throw SchemaError("duplicate table name: " + spec.name);
    for (const auto& k : spec.key) {
        if (!spec.find_column(k)) throw SchemaError("table " + spec.name + ": key column " + k + " missing");
    }
    tables_.push_back(std::move(spec));
}

const TableSpec* StoreCatalog::find(std::string_view name) const {
    for (const auto& t : tables_) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

const TableSpec& StoreCatalog::at(std::string_view name) const {
    if (const auto* t = find(name)) return *t;
    throw SchemaError("unknown table: " + std::string(name));
}

std::vector<const TableSpec*> StoreCatalog::indexes_on(std::string_view source) const {
    std::vector<const TableSpec*> out;
    for (const auto& t : tables_) {
        if (t.kind == TableKind::Index && t.source == source) out.push_back(&t);
    }
    return out;
}

TableSpec relation_table_spec(const RelationDef& relation) {
    TableSpec spec;
    spec.name = relation.name;
    spec.kind = TableKind::Base;
    spec.columns = relation.attributes;
    spec.key = relation.primary_key;
    return spec;
}

TableSpec index_table_spec(const IndexDef& index, const TableSpec& source) {
    TableSpec spec;
    spec.name = index.name;
    spec.kind = TableKind::Index;
    spec.source = source.name;
    spec.indexed_on = index.indexed_on;
    spec.key = index_key_attributes(index, source.key);
    auto add = [&](const std::string& col) {
        if (spec.find_column(col)) return;
        const Attribute* a = source.find_column(col);
        if (!a) throw SchemaError("index " + index.name + ": " + col + " is not a column of " + source.name);
        spec.columns.push_back(*a);
    };
    for (const auto& k : spec.key) add(k);
    for (const auto& c : index.attributes) add(c);
    return spec;
}

bool write_specifies_key(const RelationDef& relation, const sql::Statement& stmt) {
    for (const auto& k : relation.primary_key) {
        bool found = false;
        if (stmt.kind == sql::StatementKind::Insert) {
            found = std::any_of(stmt.values.begin(), stmt.values.end(),
                                [&](const sql::Assignment& v) { return v.column == k; });
        } else {
            found = std::any_of(stmt.filters.begin(), stmt.filters.end(), [&](const sql::Filter& f) {
                return f.op == sql::CompareOp::Eq && f.column.name == k;
            });
        }
        if (!found) return false;
    }
    return true;
}

BaselineResult baseline_transform(const SchemaDef& schema, std::span<const sql::Statement> workload) {
    BaselineResult result;
    for (const auto& r : schema.relations) result.catalog.add(relation_table_spec(r));
    for (const auto& ix : schema.indexes) {
        result.catalog.add(index_table_spec(ix, result.catalog.at(ix.base)));
    }
    for (const auto& stmt : workload) {
        if (!stmt.is_write()) {
            result.workload.push_back(stmt);
            continue;
        }
        const RelationDef* rel = schema.find(stmt.target());
        if (!rel) {
            result.rejected.push_back({stmt, "unknown relation " + stmt.target()});
        } else if (!write_specifies_key(*rel, stmt)) {
            result.rejected.push_back({stmt, "does not specify every key attribute of " + rel->name});
        } else {
            result.workload.push_back(stmt);
        }
    }
    return result;
}

}  // namespace synergy
