#include "synergy/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "synergy/errors.hpp"

namespace synergy::bench {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

Timing summarize(std::span<const double> ms) {
    Timing t;
    t.samples = ms.size();
    if (ms.empty()) return t;
    t.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
    if (ms.size() > 1) {
        double ss = 0;
        for (double x : ms) ss += (x - t.mean_ms) * (x - t.mean_ms);
        double sd = std::sqrt(ss / static_cast<double>(ms.size() - 1));
        t.stderr_ms = sd / std::sqrt(static_cast<double>(ms.size()));
    }
    return t;
}

std::string_view mode_name(JoinMode mode) { return mode == JoinMode::Join ? "join" : "view"; }

JoinBenchRow bench_join(const Database& db, std::size_t query_index, JoinMode mode, const JoinBenchOptions& o) {
    const auto& workload = db.design().input;
    if (query_index >= workload.size()) throw InvalidStatement("no workload query " + std::to_string(query_index + 1));
    const sql::Statement& q = workload[query_index];
    if (q.is_write() || q.placeholder_count() != 1) {
        throw InvalidStatement("benchmark queries are SELECTs with one placeholder");
    }
    if (o.scale == 0) throw InvalidStatement("benchmark needs a positive key domain");

    JoinBenchRow row;
    row.scale = o.scale;
    row.query = "Q" + std::to_string(query_index + 1);
    row.mode = mode;
    engine::QueryPlan plan = db.prepare(q, mode == JoinMode::View);
    row.plan = plan.describe();
    engine::Engine eng = db.engine();

    std::mt19937_64 rng(o.seed);
    std::uniform_int_distribution<std::int64_t> key(1, static_cast<std::int64_t>(o.scale));
    std::vector<double> samples;
    const std::size_t batch = std::max<std::size_t>(1, o.batch);
    for (std::size_t r = 0; r < o.repeats; ++r) {
        std::vector<Value> params(batch);
        for (auto& p : params) p = key(rng);
        auto start = Clock::now();
        for (const auto& p : params) row.rows = eng.execute(plan, std::span<const Value>(&p, 1)).rows.size();
        samples.push_back(elapsed_ms(start) / static_cast<double>(batch));
    }
    row.timing = summarize(samples);
    return row;
}

std::string join_csv_header() { return "scale,query,mode,mean_ms,stderr_ms"; }

std::string join_csv_row(const JoinBenchRow& r) {
    return std::to_string(r.scale) + "," + r.query + "," + std::string(mode_name(r.mode)) + "," +
           fixed(r.timing.mean_ms) + "," + fixed(r.timing.stderr_ms);
}

std::vector<LockBenchRow> bench_locks(std::span<const std::size_t> counts, std::size_t runs) {
    std::size_t max_count = 0;
    for (auto c : counts) max_count = std::max(max_count, c);

    storage::Store store;
    TableSpec root;
    root.name = "Root";
    root.columns = {{"RID", AttrType::Int}};
    root.key = {"RID"};
    TableSpec lock;
    lock.name = lock_table_name(root.name);
    lock.kind = TableKind::Lock;
    lock.columns = {{"RID", AttrType::Int}, {kLockColumn, AttrType::Int}};
    lock.key = {"RID"};
    store.create_table(storage::TableHandle::from_spec(root));
    store.create_table(storage::TableHandle::from_spec(lock));

    std::vector<txn::RootRef> refs;
    for (std::size_t i = 1; i <= max_count; ++i) {
        Value id = static_cast<std::int64_t>(i);
        auto key = storage::encode_key(std::span<const Value>(&id, 1));
        storage::Cell cell{"RID", id};
        store.put(root.name, key, std::span<const storage::Cell>(&cell, 1));
        refs.push_back({root.name, key});
    }

    txn::LockManager locks(store);
    std::vector<LockBenchRow> out;
    for (std::size_t count : counts) {
        std::vector<double> samples;
        for (std::size_t r = 0; r < runs; ++r) {
            auto start = Clock::now();
            for (std::size_t i = 0; i < count; ++i) locks.acquire(refs[i]);
            for (std::size_t i = 0; i < count; ++i) locks.release(refs[i]);
            samples.push_back(elapsed_ms(start));
        }
        out.push_back({count, summarize(samples)});
    }
    return out;
}

std::string lock_csv_header() { return "count,mean_ms,stderr_ms"; }

std::string lock_csv_row(const LockBenchRow& r) {
    return std::to_string(r.count) + "," + fixed(r.timing.mean_ms) + "," + fixed(r.timing.stderr_ms);
}

}  // namespace synergy::bench
