#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "synergy/design.hpp"
#include "synergy/engine.hpp"
#include "synergy/storage.hpp"
#include "synergy/txn.hpp"
#include "synergy/verify.hpp"
#include "synergy/wal.hpp"

namespace synergy {

struct DatabaseOptions {
    bool fsync = true;             // fsync each WAL append
    bool durable = true;           // false: no WAL at all (bulk loads, benchmarks)
    txn::TxnOptions txn;
    std::size_t max_read_retries = 100;
};

using StatementResult = std::variant<engine::ResultSet, txn::TxnResult>;

// One store plus its design, WAL and transaction manager. A data directory
// holds schema.json, workload.sql, meta.json, store.snap and wal.log.
class Database {
public:
    static std::unique_ptr<Database> in_memory(SchemaDef schema, std::vector<sql::Statement> workload,
                                               DatabaseOptions options = {});
    // Writes the definition files and starts from an empty store; existing
    // store and log files are discarded.
    static std::unique_ptr<Database> create(const std::filesystem::path& dir, const std::string& schema_json,
                                            const std::string& workload_text, DatabaseOptions options = {});
    // Loads the snapshot, re-applies committed statements from the log in
    // commit order, then recovers statements that never finished.
    static std::unique_ptr<Database> open(const std::filesystem::path& dir, DatabaseOptions options = {});

    static bool exists(const std::filesystem::path& dir);

    const Design& design() const { return *design_; }
    storage::Store& store() { return *store_; }
    const storage::Store& store() const { return *store_; }
    Wal& wal() { return *wal_; }
    txn::TxnManager& txn() { return *txn_; }
    engine::Engine engine() const { return engine::Engine(*store_, options_.max_read_retries); }

    // Plans q, over views when `rewrite` and a rewrite applies.
    engine::QueryPlan prepare(const sql::Statement& q, bool rewrite = true) const;
    engine::ResultSet query(const sql::Statement& q, std::span<const Value> params = {}, bool rewrite = true,
                            engine::ExecStats* stats = nullptr) const;
    txn::TxnResult write(const sql::Statement& w, std::span<const Value> params = {});
    StatementResult execute(const sql::Statement& s, std::span<const Value> params = {});
    StatementResult execute(std::string_view text, std::span<const Value> params = {});

    VerifyReport verify() const { return verify_store(*design_, *store_); }

    // Persists the store and empties the log. Needs a data directory.
    void checkpoint();
    std::size_t recovered() const { return recovered_; }
    std::size_t redone() const { return redone_; }

    // Free-form metadata kept in meta.json (populate parameters and such).
    nlohmann::json& meta() { return meta_; }
    void save_meta() const;
    const std::optional<std::filesystem::path>& dir() const { return dir_; }

private:
    Database(std::unique_ptr<Design> design, std::optional<std::filesystem::path> dir, DatabaseOptions options);

    std::unique_ptr<Design> design_;
    std::optional<std::filesystem::path> dir_;
    DatabaseOptions options_;
    std::unique_ptr<storage::Store> store_;
    std::unique_ptr<Wal> wal_;
    std::unique_ptr<txn::TxnManager> txn_;
    nlohmann::json meta_ = nlohmann::json::object();
    std::size_t recovered_ = 0;
    std::size_t redone_ = 0;
};

}  // namespace synergy
