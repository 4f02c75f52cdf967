#pragma once

#include <span>
#include <string>
#include <vector>

#include "synergy/schema.hpp"
#include "synergy/sql.hpp"
#include "synergy/viewgen.hpp"
#include "synergy/viewselect.hpp"

namespace synergy {

// Everything derived from (schema, workload): candidate views, the selected
// views, rewritten workload, indexes and the physical catalog.
struct Design {
    SchemaDef schema;
    std::vector<sql::Statement> input;
    BaselineResult baseline;
    viewgen::Generation generation;
    viewselect::Selection selection;
    std::vector<sql::Statement> rewritten;  // parallel to baseline.workload
    std::vector<IndexDef> view_indexes;
    std::vector<IndexDef> maintenance_indexes;
    StoreCatalog catalog;  // base, base indexes, views, view indexes, lock tables

    const std::vector<viewselect::ViewDef>& views() const { return selection.views; }
    const viewselect::ViewDef* find_view(std::string_view name) const { return selection.find(name); }
    const viewgen::RootedTree* tree_of(std::string_view relation) const { return generation.tree_of(relation); }
    // Index definitions over `base` (relation or view): schema, view and
    // maintenance indexes.
    std::vector<const IndexDef*> indexes_on(std::string_view base) const;
    const IndexDef* find_index(std::string_view name) const;

    sql::Statement rewrite(const sql::Statement& q) const;
};

inline std::string lock_table_name(std::string_view root) { return "LOCK_" + std::string(root); }
inline constexpr const char* kLockColumn = "lock_status";

Design build_design(SchemaDef schema, std::vector<sql::Statement> workload);

// Stable text report of the generation and selection pipeline.
std::string render_report(const Design& design);
std::string render_view_ddl(const Design& design);
std::string render_rewritten_workload(const Design& design);
std::string render_indexes(const Design& design);

}  // namespace synergy
