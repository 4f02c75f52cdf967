#include "synergy/database.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "synergy/errors.hpp"

namespace synergy {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSchemaFile = "schema.json";
constexpr const char* kWorkloadFile = "workload.sql";
constexpr const char* kMetaFile = "meta.json";
constexpr const char* kSnapshotFile = "store.snap";
constexpr const char* kWalFile = "wal.log";

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + path.string());
    out << text;
}

}  // namespace

Database::Database(std::unique_ptr<Design> design, std::optional<fs::path> dir, DatabaseOptions options)
    : design_(std::move(design)), dir_(std::move(dir)), options_(options),
      store_(std::make_unique<storage::Store>()) {
    if (!options_.durable) {
        wal_ = std::make_unique<Wal>(Wal::disabled());
    } else if (dir_) {
        wal_ = std::make_unique<Wal>(Wal::open(*dir_ / kWalFile, options_.fsync));
    } else {
        wal_ = std::make_unique<Wal>(Wal::memory());
    }
    txn_ = std::make_unique<txn::TxnManager>(*design_, *store_, *wal_, options_.txn);
}

std::unique_ptr<Database> Database::in_memory(SchemaDef schema, std::vector<sql::Statement> workload,
                                              DatabaseOptions options) {
    auto design = std::make_unique<Design>(build_design(std::move(schema), std::move(workload)));
    return std::unique_ptr<Database>(new Database(std::move(design), std::nullopt, options));
}

bool Database::exists(const fs::path& dir) {
    return fs::exists(dir / kSchemaFile) && fs::exists(dir / kWorkloadFile);
}

std::unique_ptr<Database> Database::create(const fs::path& dir, const std::string& schema_json,
                                           const std::string& workload_text, DatabaseOptions options) {
    auto design = std::make_unique<Design>(
        build_design(parse_schema_json(schema_json), sql::parse_workload(workload_text)));
    fs::create_directories(dir);
    write_file(dir / kSchemaFile, schema_json);
    write_file(dir / kWorkloadFile, workload_text);
    fs::remove(dir / kSnapshotFile);
    fs::remove(dir / kWalFile);
    fs::remove(dir / kMetaFile);
    auto db = std::unique_ptr<Database>(new Database(std::move(design), dir, options));
    db->save_meta();
    return db;
}

std::unique_ptr<Database> Database::open(const fs::path& dir, DatabaseOptions options) {
    if (!exists(dir)) throw StorageError("no database in " + dir.string());
    auto design = std::make_unique<Design>(build_design(parse_schema_json(read_file(dir / kSchemaFile)),
                                                        sql::parse_workload(read_file(dir / kWorkloadFile))));
    auto db = std::unique_ptr<Database>(new Database(std::move(design), dir, options));
    if (fs::exists(dir / kMetaFile)) db->meta_ = nlohmann::json::parse(read_file(dir / kMetaFile));
    if (fs::exists(dir / kSnapshotFile)) db->store_->load_snapshot(dir / kSnapshotFile);
    db->wal_->raise_high_water(db->meta_.value("wal_high_water", std::uint64_t{0}));

    // The store lives in memory, so statements committed after the last
    // checkpoint are applied again, in the order their commits were logged.
    std::map<std::uint64_t, std::string> begun;
    for (const auto& r : db->wal_->records()) {
        if (r.phase == WalPhase::Begin) {
            begun[r.txn_id] = r.statement;
        } else if (r.phase == WalPhase::Commit) {
            auto it = begun.find(r.txn_id);
            if (it == begun.end()) continue;
            db->txn_->replay(sql::parse_statement(it->second));
            begun.erase(it);
            ++db->redone_;
        } else {
            begun.erase(r.txn_id);
        }
    }
    db->recovered_ = db->txn_->recover();
    return db;
}

void Database::save_meta() const {
    if (!dir_) return;
    write_file(*dir_ / kMetaFile, meta_.dump(2) + "\n");
}

void Database::checkpoint() {
    if (!dir_) throw StorageError("checkpoint needs a data directory");
    store_->save_snapshot(*dir_ / kSnapshotFile);
    meta_["wal_high_water"] = wal_->high_water();
    save_meta();
    wal_->truncate();
}

engine::QueryPlan Database::prepare(const sql::Statement& q, bool rewrite) const {
    return engine::plan_query(rewrite ? design_->rewrite(q) : q, design_->catalog);
}

engine::ResultSet Database::query(const sql::Statement& q, std::span<const Value> params, bool rewrite,
                                  engine::ExecStats* stats) const {
    return engine().execute(prepare(q, rewrite), params, stats);
}

txn::TxnResult Database::write(const sql::Statement& w, std::span<const Value> params) {
    return txn_->execute(w, params);
}

StatementResult Database::execute(const sql::Statement& s, std::span<const Value> params) {
    if (s.is_write()) return write(s, params);
    return query(s, params);
}

StatementResult Database::execute(std::string_view text, std::span<const Value> params) {
    return execute(sql::parse_statement(text), params);
}

}  // namespace synergy
