#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synergy/sql.hpp"
#include "synergy/value.hpp"

namespace synergy {

struct Attribute {
    std::string name;
    AttrType type = AttrType::Int;
    bool operator==(const Attribute&) const = default;
};

struct ForeignKey {
    std::string name;
    std::vector<std::string> attributes;
    std::string references;
    std::vector<std::string> referenced_key;  // always PK(references)
    bool operator==(const ForeignKey&) const = default;
};

struct RelationDef {
    std::string name;
    std::vector<Attribute> attributes;
    std::vector<std::string> primary_key;
    std::vector<ForeignKey> foreign_keys;

    const Attribute* find_attribute(std::string_view attr) const;
    bool is_key_attribute(std::string_view attr) const;
    bool is_foreign_key_attribute(std::string_view attr) const;
    bool operator==(const RelationDef&) const = default;
};

// Covered index over a relation or a view. The index key is indexed_on
// followed by the base key attributes not already in indexed_on.
struct IndexDef {
    std::string name;
    std::string base;
    std::vector<std::string> attributes;  // covered columns
    std::vector<std::string> indexed_on;
    bool operator==(const IndexDef&) const = default;
};

std::vector<std::string> index_key_attributes(const IndexDef& index,
                                              std::span<const std::string> base_key);

struct SchemaDef {
    std::vector<RelationDef> relations;
    std::vector<IndexDef> indexes;
    std::vector<std::string> roots;

    const RelationDef* find(std::string_view relation) const;
    const RelationDef& relation(std::string_view relation) const;  // throws SchemaError
    bool is_root(std::string_view relation) const;
    // Structural checks plus cycle detection; throws SchemaError / CycleError.
    void validate() const;
};

// Edge from the referenced relation (parent, PK side) to the referencing
// relation (child, FK side).
struct SchemaEdge {
    std::string parent;
    std::string child;
    std::vector<std::string> parent_key;
    std::vector<std::string> child_fk;
    std::string fk_name;

    bool operator==(const SchemaEdge&) const = default;
    // "(AID, EHome_AID)" style label; composite keys are bracketed.
    std::string label() const;
    std::string describe() const;  // "Address->Employee (AID, EHome_AID)"
};

struct SchemaGraph {
    std::vector<std::string> nodes;
    std::vector<SchemaEdge> edges;

    bool has_node(std::string_view node) const;
    std::vector<const SchemaEdge*> out_edges(std::string_view node) const;
    std::vector<const SchemaEdge*> in_edges(std::string_view node) const;
};

// One edge per foreign key. Throws CycleError on simple or transitive
// circular references.
SchemaGraph build_schema_graph(const SchemaDef& schema);

SchemaDef parse_schema_json(std::string_view text);
std::string schema_to_json(const SchemaDef& schema);
SchemaDef load_schema_file(const std::filesystem::path& path);

enum class TableKind { Base, View, Index, Lock };
std::string_view table_kind_name(TableKind kind);

// Physical description of one key-value table.
struct TableSpec {
    std::string name;
    TableKind kind = TableKind::Base;
    std::vector<Attribute> columns;
    std::vector<std::string> key;         // column names, in key order
    std::string source;                   // Index: table it indexes
    std::vector<std::string> indexed_on;  // Index only

    const Attribute* find_column(std::string_view column) const;
    std::vector<AttrType> key_types() const;
};

class StoreCatalog {
public:
    void add(TableSpec spec);  // throws SchemaError on duplicate names
    const TableSpec* find(std::string_view name) const;
    const TableSpec& at(std::string_view name) const;
    const std::vector<TableSpec>& tables() const { return tables_; }
    std::vector<const TableSpec*> indexes_on(std::string_view source) const;

private:
    std::vector<TableSpec> tables_;
};

TableSpec relation_table_spec(const RelationDef& relation);
TableSpec index_table_spec(const IndexDef& index, const TableSpec& source);

struct RejectedStatement {
    sql::Statement statement;
    std::string reason;
};

struct BaselineResult {
    StoreCatalog catalog;
    std::vector<sql::Statement> workload;
    std::vector<RejectedStatement> rejected;
};

// True when a write names every primary-key attribute of its relation (as an
// equality filter for UPDATE/DELETE, as a column for INSERT).
bool write_specifies_key(const RelationDef& relation, const sql::Statement& stmt);

BaselineResult baseline_transform(const SchemaDef& schema, std::span<const sql::Statement> workload);

}  // namespace synergy
