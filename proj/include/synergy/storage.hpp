#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synergy/schema.hpp"
#include "synergy/value.hpp"

namespace synergy::storage {

// Order-preserving row key: components joined by 0x1F. Strings escape 0x1F
// and 0x1B with a 0x1B prefix; integers are 8-byte big-endian with the sign
// bit flipped. Byte order matches tuple order for strings without control
// bytes (< 0x20); decoding is exact for every input.
using RowKey = std::string;

inline constexpr char kKeyDelimiter = '\x1F';
inline constexpr char kKeyEscape = '\x1B';

RowKey encode_key(std::span<const Value> values);
// Validates arity and component types against `types`; throws KeyError.
RowKey encode_key(std::span<const Value> values, std::span<const AttrType> types);
std::vector<Value> decode_key(std::string_view key, std::span<const AttrType> types);

// Prefix matching every key whose leading components equal `values`.
// Requires values.size() < arity of the key; for a full key use encode_key.
std::string encode_key_prefix(std::span<const Value> values);
// Smallest string strictly greater than every string starting with prefix.
std::string prefix_end(std::string_view prefix);

struct Cell {
    std::string column;
    Value value;
    bool operator==(const Cell&) const = default;
};

inline constexpr std::string_view kDirtyColumn = "_dirty";

class ColumnSet {
public:
    explicit ColumnSet(std::vector<std::string> names) : names_(std::move(names)) {}
    std::optional<std::size_t> index_of(std::string_view column) const;
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
};

class Row {
public:
    Row() = default;

    const RowKey& key() const { return key_; }
    bool dirty() const { return dirty_; }
    // Absent cells read as std::monostate.
    const Value& get(std::string_view column) const;
    bool has(std::string_view column) const { return !is_null(get(column)); }
    std::vector<Cell> cells() const;

    // Column layout shared by rows of one table version; positions from
    // layout()->index_of() read back with at().
    const std::shared_ptr<const ColumnSet>& layout() const { return columns_; }
    const Value& at(std::optional<std::size_t> index) const {
        if (!values_ || !index || *index >= values_->size()) return absent();
        return (*values_)[*index];
    }

    bool operator==(const Row& other) const;

private:
    friend class Table;
    friend class Scanner;
    const std::vector<Value>& values() const;
    static const Value& absent();

    RowKey key_;
    std::shared_ptr<const ColumnSet> columns_;
    std::shared_ptr<const std::vector<Value>> values_;  // shared with the table until it writes
    bool dirty_ = false;
};

struct KeyRange {
    std::string start;               // inclusive
    std::optional<std::string> end;  // exclusive; nullopt = unbounded

    static KeyRange all() { return {}; }
    static KeyRange prefix(std::string p) {
        std::string e = prefix_end(p);
        return {std::move(p), e.empty() ? std::nullopt : std::optional<std::string>(std::move(e))};
    }
};

using RowFilter = std::function<bool(const Row&)>;

struct TableHandle {
    std::string name;
    TableKind kind = TableKind::Base;
    std::vector<Attribute> columns;
    std::vector<AttrType> key_types;

    static TableHandle from_spec(const TableSpec& spec);
};

class Table;

// Streams rows of one table in key order. Rows are fetched in batches; each
// row is a committed single-row state, but successive batches are not a
// consistent snapshot of the table.
class Scanner {
public:
    Scanner(Scanner&&) = default;
    Scanner& operator=(Scanner&&) = default;
    ~Scanner();

    std::optional<Row> next();
    // Like next(), without copying: the row stays valid until the following
    // call and its buffers are reused, so callers copying it out allocate less.
    const Row* advance();

private:
    friend class Table;
    Scanner(const Table* table, KeyRange range, RowFilter filter);
    void fill();

    const Table* table_;
    KeyRange range_;
    RowFilter filter_;
    std::vector<Row> buffer_;  // entries past filled_ are spare, kept for their capacity;
                               // recycled across scanners of one thread
    std::size_t filled_ = 0;
    std::size_t next_ = 0;  // first unread entry of buffer_
    std::optional<std::string> cursor_;  // last key handed out
    bool exhausted_ = false;
};

class Table {
public:
    explicit Table(TableHandle handle);

    const TableHandle& handle() const { return handle_; }
    const std::string& name() const { return handle_.name; }

    std::optional<Row> get(std::string_view key) const;
    // Loads the row into `out`, reusing its storage; false when absent.
    bool get_into(std::string_view key, Row& out) const;
    // Merges cells into the row, creating it when absent. A std::monostate
    // value removes the cell. `dirty`, when given, sets the dirty mark.
    void put(std::string_view key, std::span<const Cell> cells, std::optional<bool> dirty = std::nullopt);
    // Sets the dirty mark of an existing row; returns false when absent.
    bool mark(std::string_view key, bool dirty);
    bool erase(std::string_view key);
    std::int64_t increment(std::string_view key, std::string_view column, std::int64_t delta);
    // Writes `value` iff the cell equals `expected` (nullopt = cell absent).
    bool check_and_put(std::string_view key, std::string_view column, const std::optional<Value>& expected,
                       const Value& value);

    Scanner scan(KeyRange range = KeyRange::all(), RowFilter filter = {}) const;
    std::vector<Row> scan_all(KeyRange range = KeyRange::all(), RowFilter filter = {}) const;
    std::size_t size() const;

private:
    friend class Scanner;
    friend class Store;

    // Cell values are copy-on-write: rows handed out keep the version they
    // were read from.
    struct Stored {
        std::shared_ptr<std::vector<Value>> values;
        bool dirty = false;
    };

    Row make_row(const std::string& key, const Stored& stored) const;
    void load_row(const std::string& key, const Stored& stored, Row& out) const;
    std::size_t column_index(std::string_view column);  // requires exclusive lock
    static std::vector<Value>& writable(Stored& stored);  // requires exclusive lock
    void assign(std::vector<Value>& values, std::string_view column, Value value);

    TableHandle handle_;
    mutable std::shared_mutex mutex_;
    std::shared_ptr<const ColumnSet> columns_;
    std::map<std::string, Stored, std::less<>> rows_;
};

class Store {
public:
    Store() = default;
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    Table& create_table(TableHandle handle);  // StorageError if it exists
    bool has_table(std::string_view name) const;
    Table& table(std::string_view name);  // UnknownTable
    const Table& table(std::string_view name) const;
    std::vector<std::string> table_names() const;  // sorted

    std::optional<Row> get(std::string_view table, std::string_view key) const {
        return this->table(table).get(key);
    }
    void put(std::string_view table, std::string_view key, std::span<const Cell> cells) {
        this->table(table).put(key, cells);
    }
    bool erase(std::string_view table, std::string_view key) { return this->table(table).erase(key); }
    std::int64_t increment(std::string_view table, std::string_view key, std::string_view column,
                           std::int64_t delta) {
        return this->table(table).increment(key, column, delta);
    }
    bool check_and_put(std::string_view table, std::string_view key, std::string_view column,
                       const std::optional<Value>& expected, const Value& value) {
        return this->table(table).check_and_put(key, column, expected, value);
    }
    Scanner scan(std::string_view table, KeyRange range = KeyRange::all(), RowFilter filter = {}) const {
        return this->table(table).scan(std::move(range), std::move(filter));
    }

    // Snapshot: sequence of (table, key, column, value) records, each field
    // u32-length-prefixed; values carry a u8 tag (0 int64 LE, 1 string).
    std::string snapshot_bytes() const;
    void load_snapshot_bytes(std::string_view bytes);
    void save_snapshot(const std::filesystem::path& path) const;
    void load_snapshot(const std::filesystem::path& path);

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::unique_ptr<Table>, std::less<>> tables_;
};

}  // namespace synergy::storage
