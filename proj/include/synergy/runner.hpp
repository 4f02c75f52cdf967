#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "synergy/bench.hpp"
#include "synergy/database.hpp"

namespace synergy::runner {

// Draws parameter values for placeholders: existing values for filter
// columns and foreign keys, fresh integers for inserted primary keys,
// random values otherwise. Value pools are sampled once at construction.
class ParamBinder {
public:
    explicit ParamBinder(const Database& db);

    std::vector<Value> bind(const sql::Statement& stmt, std::mt19937_64& rng);

private:
    Value existing(const std::string& relation, const std::string& column, AttrType type, std::mt19937_64& rng);
    Value fresh_key(const std::string& relation, const std::string& column);

    const Database& db_;
    std::map<std::string, std::vector<Value>, std::less<>> pools_;  // "Rel.col" -> values
    std::map<std::string, std::atomic<std::int64_t>, std::less<>> next_key_;
};

struct StatementStats {
    std::string sql;
    std::size_t count = 0;
    std::size_t errors = 0;
    std::string first_error;
    bench::Timing timing;
};

struct RunOptions {
    std::size_t threads = 1;
    std::size_t statements = 100;  // total executions, round-robin over the workload
    std::uint64_t seed = 42;
};

struct RunReport {
    std::vector<StatementStats> per_statement;
    double wall_ms = 0;

    std::size_t errors() const;
    std::string csv() const;  // statement,sql,count,errors,mean_ms,stderr_ms
};

RunReport run_workload(Database& db, std::span<const sql::Statement> workload, const RunOptions& options);

}  // namespace synergy::runner
