#pragma once

#include <span>
#include <string>
#include <vector>

#include "synergy/schema.hpp"
#include "synergy/sql.hpp"
#include "synergy/viewgen.hpp"

namespace synergy::viewselect {

struct ViewDef {
    viewgen::CandidateView view;
    std::string name;
    std::vector<std::size_t> provenance;  // indices of the workload queries it serves

    const std::vector<std::string>& relations() const { return view.relations(); }
};

// Marking procedure. Throws UnsupportedQuery if a relation occurs twice.
std::vector<viewgen::Path> select_views_for_query(const sql::Statement& q, std::span<const viewgen::RootedTree> trees);

struct QuerySelection {
    std::size_t query = 0;             // index into the workload
    std::vector<std::string> views;    // names, in selection order
};

struct RejectedQuery {
    std::size_t query = 0;
    std::string reason;
};

struct Selection {
    std::vector<ViewDef> views;
    std::vector<QuerySelection> per_query;
    std::vector<RejectedQuery> rejected;

    const ViewDef* find(std::string_view name) const;
};

// Selects, deduplicates and test-rewrites per query; a query whose rewrite
// fails contributes no views and is recorded as rejected.
Selection select_views(std::span<const sql::Statement> workload, std::span<const viewgen::RootedTree> trees,
                       const SchemaDef& schema);

// Replaces each view's relations by one table ref (aliases v1, v2, ...) at
// the position of its first relation in `q`. Throws AmbiguityError or
// UnsupportedQuery when the rewrite would change the result.
sql::Statement rewrite_query(const sql::Statement& q, std::span<const ViewDef* const> selected);

// Rewrites `q` with whichever of its marked paths are materialized among
// `available`; returns q unchanged when none are or rewriting fails.
sql::Statement rewrite_with(const sql::Statement& q, std::span<const viewgen::RootedTree> trees,
                            std::span<const ViewDef> available);

// A view-index on one filter attribute (equality first, then by name) when
// no filter of a query on the view is served by the view key or an index.
std::vector<IndexDef> recommend_view_indexes(std::span<const sql::Statement> rewritten,
                                             std::span<const ViewDef> views,
                                             std::span<const IndexDef> existing = {});

// One key-only index per (view, non-last relation targeted by an UPDATE).
std::vector<IndexDef> recommend_maintenance_indexes(std::span<const ViewDef> views,
                                                    std::span<const sql::Statement> workload,
                                                    const SchemaDef& schema);

std::string maintenance_index_name(const ViewDef& view, std::string_view relation);

}  // namespace synergy::viewselect
