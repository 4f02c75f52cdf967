#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synergy/database.hpp"

namespace synergy::bench {

struct Timing {
    double mean_ms = 0;
    double stderr_ms = 0;  // standard error of the mean
    std::size_t samples = 0;
};

Timing summarize(std::span<const double> ms);

enum class JoinMode { Join, View };
std::string_view mode_name(JoinMode mode);

struct JoinBenchRow {
    std::size_t scale = 0;
    std::string query;  // "Q1", "Q2", ...
    JoinMode mode = JoinMode::Join;
    Timing timing;      // per query execution
    std::size_t rows = 0;  // result rows of the last execution
    std::string plan;
};

struct JoinBenchOptions {
    std::size_t repeats = 10;
    std::size_t batch = 50;  // executions per sample, one random key each
    std::uint64_t seed = 42;
    std::size_t scale = 0;   // key domain of the single placeholder: 1..scale
};

// Times workload query `query_index` (single int placeholder) over base
// tables (Join) or over its views (View).
JoinBenchRow bench_join(const Database& db, std::size_t query_index, JoinMode mode, const JoinBenchOptions& options);

std::string join_csv_header();  // scale,query,mode,mean_ms,stderr_ms
std::string join_csv_row(const JoinBenchRow& row);

struct LockBenchRow {
    std::size_t count = 0;
    Timing timing;  // acquiring then releasing `count` locks
};

// Uncontended check-and-put locks on distinct root rows of a scratch store.
std::vector<LockBenchRow> bench_locks(std::span<const std::size_t> counts, std::size_t runs = 10);

std::string lock_csv_header();  // count,mean_ms,stderr_ms
std::string lock_csv_row(const LockBenchRow& row);

}  // namespace synergy::bench
