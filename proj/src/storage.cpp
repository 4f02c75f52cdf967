#include "synergy/storage.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "synergy/errors.hpp"

namespace synergy::storage {

namespace {

constexpr std::size_t kScanBatch = 256;
const Value kAbsent{};

void append_int(std::string& out, std::int64_t v) {
    auto u = static_cast<std::uint64_t>(v) ^ 0x8000000000000000ULL;
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>((u >> shift) & 0xFF));
}

void append_component(std::string& out, const Value& v) {
    if (auto* i = std::get_if<std::int64_t>(&v)) {
        append_int(out, *i);
    } else if (auto* s = std::get_if<std::string>(&v)) {
        for (char c : *s) {
            if (c == kKeyDelimiter || c == kKeyEscape) out.push_back(kKeyEscape);
            out.push_back(c);
        }
    } else {
        throw KeyError("key components may not be absent");
    }
}

}  // namespace

RowKey encode_key(std::span<const Value> values) {
    RowKey out;
    std::size_t size = values.size();
    for (const auto& v : values) {
        const auto* str = std::get_if<std::string>(&v);
        size += str ? str->size() + 2 : 8;
    }
    out.reserve(size);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out.push_back(kKeyDelimiter);
        append_component(out, values[i]);
    }
    return out;
}

RowKey encode_key(std::span<const Value> values, std::span<const AttrType> types) {
    if (values.size() != types.size()) {
        throw KeyError("key arity mismatch: expected " + std::to_string(types.size()) + " components, got " +
                       std::to_string(values.size()));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!has_type(values[i], types[i])) {
            throw KeyError("key component " + std::to_string(i) + " must be " +
                           std::string(type_name(types[i])));
        }
    }
    return encode_key(values);
}

std::vector<Value> decode_key(std::string_view key, std::span<const AttrType> types) {
    std::vector<Value> out;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < types.size(); ++i) {
        if (i) {
            if (pos >= key.size() || key[pos] != kKeyDelimiter) throw KeyError("malformed key: missing delimiter");
            ++pos;
        }
        if (types[i] == AttrType::Int) {
            if (pos + 8 > key.size()) throw KeyError("malformed key: truncated integer");
            std::uint64_t u = 0;
            for (int b = 0; b < 8; ++b) u = (u << 8) | static_cast<unsigned char>(key[pos + b]);
            out.emplace_back(static_cast<std::int64_t>(u ^ 0x8000000000000000ULL));
            pos += 8;
        } else {
            std::string s;
            while (pos < key.size() && key[pos] != kKeyDelimiter) {
                if (key[pos] == kKeyEscape) {
                    if (++pos >= key.size()) throw KeyError("malformed key: dangling escape");
                }
                s.push_back(key[pos++]);
            }
            out.emplace_back(std::move(s));
        }
    }
    if (pos != key.size()) throw KeyError("malformed key: trailing bytes");
    return out;
}

std::string encode_key_prefix(std::span<const Value> values) {
    std::string out = encode_key(values);
    out.push_back(kKeyDelimiter);
    return out;
}

std::string prefix_end(std::string_view prefix) {
    std::string out(prefix);
    while (!out.empty()) {
        auto last = static_cast<unsigned char>(out.back());
        if (last < 0xFF) {
            out.back() = static_cast<char>(last + 1);
            return out;
        }
        out.pop_back();
    }
    return out;
}

std::optional<std::size_t> ColumnSet::index_of(std::string_view column) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == column) return i;
    }
    return std::nullopt;
}

const std::vector<Value>& Row::values() const {
    static const std::vector<Value> kNone;
    return values_ ? *values_ : kNone;
}

const Value& Row::get(std::string_view column) const {
    if (!columns_) return kAbsent;
    return at(columns_->index_of(column));
}

const Value& Row::absent() { return kAbsent; }

std::vector<Cell> Row::cells() const {
    std::vector<Cell> out;
    if (!columns_) return out;
    const auto& v = values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!is_null(v[i])) out.push_back({columns_->names()[i], v[i]});
    }
    return out;
}

bool Row::operator==(const Row& other) const {
    if (key_ != other.key_ || dirty_ != other.dirty_) return false;
    auto a = cells();
    auto b = other.cells();
    auto by_name = [](const Cell& x, const Cell& y) { return x.column < y.column; };
    std::sort(a.begin(), a.end(), by_name);
    std::sort(b.begin(), b.end(), by_name);
    return a == b;
}

TableHandle TableHandle::from_spec(const TableSpec& spec) {
    return {spec.name, spec.kind, spec.columns, spec.key_types()};
}

namespace {

// Buffers of finished scanners, so short scans on a hot path reuse row and
// key storage instead of allocating it per scan.
constexpr std::size_t kSpareBuffers = 16;
thread_local std::vector<std::vector<Row>> spare_buffers;

}  // namespace

Scanner::Scanner(const Table* table, KeyRange range, RowFilter filter)
    : table_(table), range_(std::move(range)), filter_(std::move(filter)) {
    if (!spare_buffers.empty()) {
        buffer_ = std::move(spare_buffers.back());
        spare_buffers.pop_back();
    }
}

Scanner::~Scanner() {
    if (buffer_.empty() || spare_buffers.size() >= kSpareBuffers) return;
    for (auto& row : buffer_) row.values_.reset();
    spare_buffers.push_back(std::move(buffer_));
}

std::optional<Row> Scanner::next() {
    if (const Row* row = advance()) return *row;
    return std::nullopt;
}

const Row* Scanner::advance() {
    if (next_ == filled_ && !exhausted_) fill();
    if (next_ == filled_) return nullptr;
    return &buffer_[next_++];
}

void Scanner::fill() {
    filled_ = 0;
    next_ = 0;
    std::shared_lock lock(table_->mutex_);
    auto it = cursor_ ? table_->rows_.upper_bound(*cursor_) : table_->rows_.lower_bound(range_.start);
    std::size_t visited = 0;
    for (; it != table_->rows_.end() && visited < kScanBatch; ++it, ++visited) {
        if (range_.end && it->first >= *range_.end) {
            exhausted_ = true;
            break;
        }
        cursor_ = it->first;
        if (filled_ == buffer_.size()) buffer_.emplace_back();
        Row& row = buffer_[filled_];
        table_->load_row(it->first, it->second, row);
        if (!filter_ || filter_(row)) ++filled_;
    }
    if (it == table_->rows_.end()) exhausted_ = true;
}

Table::Table(TableHandle handle) : handle_(std::move(handle)) {
    std::vector<std::string> names;
    for (const auto& c : handle_.columns) names.push_back(c.name);
    columns_ = std::make_shared<const ColumnSet>(std::move(names));
}

Row Table::make_row(const std::string& key, const Stored& stored) const {
    Row row;
    load_row(key, stored, row);
    return row;
}

void Table::load_row(const std::string& key, const Stored& stored, Row& out) const {
    out.key_.assign(key);
    if (out.columns_ != columns_) out.columns_ = columns_;
    out.values_ = stored.values;
    out.dirty_ = stored.dirty;
}

std::size_t Table::column_index(std::string_view column) {
    if (auto idx = columns_->index_of(column)) return *idx;
    auto names = columns_->names();
    names.emplace_back(column);
    columns_ = std::make_shared<const ColumnSet>(std::move(names));
    return columns_->names().size() - 1;
}

std::vector<Value>& Table::writable(Stored& stored) {
    // Readers only copy the pointer under the table lock, which the writer
    // holds exclusively, so a count of 1 cannot grow behind our back.
    if (!stored.values) {
        stored.values = std::make_shared<std::vector<Value>>();
    } else if (stored.values.use_count() > 1) {
        stored.values = std::make_shared<std::vector<Value>>(*stored.values);
    }
    return *stored.values;
}

void Table::assign(std::vector<Value>& values, std::string_view column, Value value) {
    std::size_t idx = column_index(column);
    if (values.size() <= idx) values.resize(idx + 1);
    values[idx] = std::move(value);
}

std::optional<Row> Table::get(std::string_view key) const {
    std::shared_lock lock(mutex_);
    auto it = rows_.find(key);
    if (it == rows_.end()) return std::nullopt;
    return make_row(it->first, it->second);
}

bool Table::get_into(std::string_view key, Row& out) const {
    std::shared_lock lock(mutex_);
    auto it = rows_.find(key);
    if (it == rows_.end()) return false;
    load_row(it->first, it->second, out);
    return true;
}

void Table::put(std::string_view key, std::span<const Cell> cells, std::optional<bool> dirty) {
    std::unique_lock lock(mutex_);
    auto it = rows_.find(key);
    for (const auto& c : cells) {
        if (c.column == kDirtyColumn) throw StorageError("_dirty is reserved; use the dirty flag");
    }
    if (it == rows_.end()) it = rows_.emplace(std::string(key), Stored{}).first;
    if (!cells.empty()) {
        auto& values = writable(it->second);
        for (const auto& c : cells) assign(values, c.column, c.value);
    } else if (!it->second.values) {
        writable(it->second);
    }
    if (dirty) it->second.dirty = *dirty;
}

bool Table::mark(std::string_view key, bool dirty) {
    std::unique_lock lock(mutex_);
    auto it = rows_.find(key);
    if (it == rows_.end()) return false;
    it->second.dirty = dirty;
    return true;
}

bool Table::erase(std::string_view key) {
    std::unique_lock lock(mutex_);
    auto it = rows_.find(key);
    if (it == rows_.end()) return false;
    rows_.erase(it);
    return true;
}

std::int64_t Table::increment(std::string_view key, std::string_view column, std::int64_t delta) {
    std::unique_lock lock(mutex_);
    auto it = rows_.find(key);
    if (it == rows_.end()) it = rows_.emplace(std::string(key), Stored{}).first;
    std::size_t idx = column_index(column);
    Stored& stored = it->second;
    const Value* existing = stored.values && idx < stored.values->size() ? &(*stored.values)[idx] : &kAbsent;
    std::int64_t current = 0;
    if (auto* i = std::get_if<std::int64_t>(existing)) {
        current = *i;
    } else if (!is_null(*existing)) {
        throw TypeError("cannot increment non-integer column " + std::string(column) + " of " + name());
    }
    auto& values = writable(stored);
    if (values.size() <= idx) values.resize(idx + 1);
    values[idx] = current + delta;
    return current + delta;
}

bool Table::check_and_put(std::string_view key, std::string_view column, const std::optional<Value>& expected,
                          const Value& value) {
    std::unique_lock lock(mutex_);
    auto it = rows_.find(key);
    const Value* current = &kAbsent;
    if (it != rows_.end()) {
        const auto& values = it->second.values;
        if (auto idx = columns_->index_of(column); values && idx && *idx < values->size()) {
            current = &(*values)[*idx];
        }
    }
    bool matches = expected ? (!is_null(*current) && *current == *expected) : is_null(*current);
    if (!matches) return false;
    if (it == rows_.end()) it = rows_.emplace(std::string(key), Stored{}).first;
    assign(writable(it->second), column, value);
    return true;
}

Scanner Table::scan(KeyRange range, RowFilter filter) const {
    return Scanner(this, std::move(range), std::move(filter));
}

std::vector<Row> Table::scan_all(KeyRange range, RowFilter filter) const {
    std::vector<Row> out;
    Scanner s = scan(std::move(range), std::move(filter));
    while (auto row = s.next()) out.push_back(std::move(*row));
    return out;
}

std::size_t Table::size() const {
    std::shared_lock lock(mutex_);
    return rows_.size();
}

Table& Store::create_table(TableHandle handle) {
    std::unique_lock lock(mutex_);
    if (tables_.count(handle.name)) throw StorageError("table already exists: " + handle.name);
    std::string name = handle.name;
    auto [it, _] = tables_.emplace(std::move(name), std::make_unique<Table>(std::move(handle)));
    return *it->second;
}

bool Store::has_table(std::string_view name) const {
    std::shared_lock lock(mutex_);
    return tables_.find(name) != tables_.end();
}

Table& Store::table(std::string_view name) {
    std::shared_lock lock(mutex_);
    auto it = tables_.find(name);
    if (it == tables_.end()) throw UnknownTable(std::string(name));
    return *it->second;
}

const Table& Store::table(std::string_view name) const {
    std::shared_lock lock(mutex_);
    auto it = tables_.find(name);
    if (it == tables_.end()) throw UnknownTable(std::string(name));
    return *it->second;
}

std::vector<std::string> Store::table_names() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, _] : tables_) out.push_back(name);
    return out;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_field(std::string& out, std::string_view s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

void put_value(std::string& out, const Value& v) {
    if (auto* i = std::get_if<std::int64_t>(&v)) {
        out.push_back('\0');
        auto u = static_cast<std::uint64_t>(*i);
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
    } else {
        out.push_back('\1');
        put_field(out, std::get<std::string>(v));
    }
}

class SnapshotReader {
public:
    explicit SnapshotReader(std::string_view bytes) : bytes_(bytes) {}
    bool done() const { return pos_ >= bytes_.size(); }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::string_view field() {
        std::uint32_t n = u32();
        need(n);
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    Value value() {
        need(1);
        char tag = bytes_[pos_++];
        if (tag == '\0') {
            need(8);
            std::uint64_t u = 0;
            for (int b = 0; b < 8; ++b) u |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
            pos_ += 8;
            return static_cast<std::int64_t>(u);
        }
        if (tag == '\1') return std::string(field());
        throw StorageError("snapshot: unknown value tag at offset " + std::to_string(pos_ - 1));
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw StorageError("snapshot: truncated record");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string Store::snapshot_bytes() const {
    std::string out;
    for (const auto& name : table_names()) {
        const Table& t = table(name);
        std::shared_lock lock(t.mutex_);
        const auto& columns = t.columns_->names();
        for (const auto& [key, stored] : t.rows_) {
            const std::size_t n = stored.values ? stored.values->size() : 0;
            for (std::size_t i = 0; i < n; ++i) {
                const Value& v = (*stored.values)[i];
                if (is_null(v)) continue;
                put_field(out, name);
                put_field(out, key);
                put_field(out, columns[i]);
                put_value(out, v);
            }
            if (stored.dirty) {
                put_field(out, name);
                put_field(out, key);
                put_field(out, kDirtyColumn);
                put_value(out, std::int64_t{1});
            }
        }
    }
    return out;
}

void Store::load_snapshot_bytes(std::string_view bytes) {
    SnapshotReader in(bytes);
    while (!in.done()) {
        std::string_view table_name = in.field();
        std::string_view key = in.field();
        std::string_view column = in.field();
        Value value = in.value();
        Table& t = table(table_name);
        if (column == kDirtyColumn) {
            bool dirty = std::holds_alternative<std::int64_t>(value) && std::get<std::int64_t>(value) != 0;
            t.put(key, {}, dirty);
        } else {
            Cell cell{std::string(column), std::move(value)};
            t.put(key, std::span<const Cell>(&cell, 1));
        }
    }
}

void Store::save_snapshot(const std::filesystem::path& path) const {
    std::string bytes = snapshot_bytes();
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageError("cannot write snapshot: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw StorageError("short write to snapshot: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void Store::load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot read snapshot: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    load_snapshot_bytes(buf.str());
}

}  // namespace synergy::storage
