#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synergy/design.hpp"
#include "synergy/sql.hpp"
#include "synergy/storage.hpp"

namespace synergy::maintenance {

// Attribute name -> value for one logical row.
using Tuple = std::map<std::string, Value, std::less<>>;

class Reader {
public:
    virtual ~Reader() = default;
    virtual std::optional<storage::Row> get(std::string_view table, std::string_view key) = 0;
    virtual std::vector<storage::Row> scan(std::string_view table, const storage::KeyRange& range) = 0;
};

class StoreReader : public Reader {
public:
    explicit StoreReader(const storage::Store& store) : store_(store) {}
    std::optional<storage::Row> get(std::string_view table, std::string_view key) override;
    std::vector<storage::Row> scan(std::string_view table, const storage::KeyRange& range) override;

private:
    const storage::Store& store_;
};

Tuple row_tuple(const storage::Row& row);
std::vector<storage::Cell> tuple_cells(const Tuple& t);

// Encodes spec.key from `t`. Throws KeyError when a key attribute is missing
// or mistyped.
storage::RowKey key_of(const TableSpec& spec, const Tuple& t);

// Index row for a source row: key = index key columns, cells = every column
// of the index table.
std::pair<storage::RowKey, std::vector<storage::Cell>> index_row(const TableSpec& index, const Tuple& source);

bool insert_applies(const viewselect::ViewDef& view, std::string_view relation);
bool delete_applies(const viewselect::ViewDef& view, std::string_view relation);
bool update_applies(const viewselect::ViewDef& view, std::string_view relation);

// Tuple of an INSERT with bound values, checked against the relation.
Tuple insert_tuple(const RelationDef& relation, const sql::Statement& insert);

// Primary key values named by the equality filters of a bound UPDATE/DELETE.
Tuple key_tuple(const RelationDef& relation, const sql::Statement& stmt);

// Reads the parent of `child` along `edge`; nullopt when the FK is unset or
// the parent row is absent.
std::optional<Tuple> read_parent(const SchemaEdge& edge, const Tuple& child, Reader& reader);

// Reads R_{k-1} down to R_1 (k-1 reads) and merges them with the inserted
// tuple of R_k. nullopt when an ancestor row is absent.
std::optional<Tuple> build_insert_view_tuple(const viewselect::ViewDef& view, const Tuple& inserted,
                                             Reader& reader);

struct IndexKey {
    std::string index;
    storage::RowKey key;
    bool operator==(const IndexKey&) const = default;
};

// Reads the view row at `view_key` and derives the key of each of its index
// rows. Empty when the view row is absent.
std::vector<IndexKey> build_delete_index_keys(const Design& design, const viewselect::ViewDef& view,
                                              const storage::RowKey& view_key, Reader& reader);

// Index rows that change when a source row goes from `before` to `after`;
// an empty tuple stands for an absent row.
struct IndexChange {
    std::string index;
    std::optional<storage::RowKey> old_key;  // nullopt: no row before
    std::optional<storage::RowKey> new_key;  // nullopt: no row after
    std::vector<storage::Cell> cells;        // full new row
    bool moves() const { return old_key != new_key; }
};

struct ViewRowUpdate {
    storage::RowKey key;
    Tuple before;
    Tuple after;
    std::vector<storage::Cell> changed;  // only the assigned view columns
    std::vector<IndexChange> indexes;
};

struct UpdatePlan {
    std::string view;
    std::vector<ViewRowUpdate> rows;
    enum class Access { ViewKey, MaintenanceIndex, FullScan } access = Access::FullScan;
};

// Assignments of a bound UPDATE. Throws UnsupportedUpdate when one targets a
// primary-key or foreign-key attribute.
Tuple update_assignments(const RelationDef& relation, const sql::Statement& update);

std::vector<IndexChange> index_changes(const Design& design, std::string_view source, const Tuple& before,
                                       const Tuple& after);

// Locates the view rows derived from the base row with key `base_key` of
// `relation` and plans their new contents.
UpdatePlan plan_update_rows(const Design& design, const viewselect::ViewDef& view, std::string_view relation,
                            const Tuple& base_key, const Tuple& assignments, Reader& reader);

}  // namespace synergy::maintenance
