#include "synergy/runner.hpp"

#include <chrono>
#include <cstdio>
#include <mutex>
#include <thread>

#include "synergy/errors.hpp"

namespace synergy::runner {

namespace {

using Clock = std::chrono::steady_clock;

std::string pool_key(std::string_view relation, std::string_view column) {
    return std::string(relation) + "." + std::string(column);
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

constexpr std::size_t kPoolLimit = 4096;

}  // namespace

ParamBinder::ParamBinder(const Database& db) : db_(db) {
    for (const auto& r : db.design().schema.relations) {
        std::map<std::string, std::vector<Value>> columns;
        std::size_t seen = 0;
        for (auto scan = db.store().scan(r.name); auto row = scan.next();) {
            if (++seen > kPoolLimit) break;
            for (const auto& a : r.attributes) {
                if (row->has(a.name)) columns[a.name].push_back(row->get(a.name));
            }
        }
        for (auto& [col, values] : columns) pools_[pool_key(r.name, col)] = std::move(values);

        if (r.primary_key.empty()) continue;
        for (const auto& k : r.primary_key) {
            const Attribute* a = r.find_attribute(k);
            if (!a || a->type != AttrType::Int || r.is_foreign_key_attribute(k)) continue;
            std::int64_t max = 0;
            for (auto scan = db.store().scan(r.name); auto row = scan.next();) {
                if (auto* v = std::get_if<std::int64_t>(&row->get(k))) max = std::max(max, *v);
            }
            next_key_.try_emplace(pool_key(r.name, k), max + 1);
        }
    }
}

Value ParamBinder::existing(const std::string& relation, const std::string& column, AttrType type,
                            std::mt19937_64& rng) {
    auto it = pools_.find(pool_key(relation, column));
    if (it != pools_.end() && !it->second.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, it->second.size() - 1);
        return it->second[pick(rng)];
    }
    std::uniform_int_distribution<std::int64_t> any(1, 1000);
    if (type == AttrType::Int) return any(rng);
    return "v" + std::to_string(any(rng));
}

Value ParamBinder::fresh_key(const std::string& relation, const std::string& column) {
    auto it = next_key_.find(pool_key(relation, column));
    if (it == next_key_.end()) throw InvalidStatement("no fresh keys for " + pool_key(relation, column));
    return it->second.fetch_add(1);
}

std::vector<Value> ParamBinder::bind(const sql::Statement& stmt, std::mt19937_64& rng) {
    std::vector<Value> params(stmt.placeholder_count());
    const SchemaDef& schema = db_.design().schema;
    auto fill = [&](const sql::Operand& op, const std::string& relation, const std::string& column, bool insert) {
        auto* p = std::get_if<sql::Placeholder>(&op);
        if (!p || p->index >= params.size()) return;
        const RelationDef* r = schema.find(relation);
        const Attribute* a = r ? r->find_attribute(column) : nullptr;
        AttrType type = a ? a->type : AttrType::Int;
        if (insert && r && r->is_key_attribute(column) && !r->is_foreign_key_attribute(column) &&
            next_key_.count(pool_key(relation, column))) {
            params[p->index] = fresh_key(relation, column);
        } else if (insert && r && !r->is_foreign_key_attribute(column)) {
            std::uniform_int_distribution<std::int64_t> any(1, 1000);
            params[p->index] = type == AttrType::Int ? Value(any(rng)) : Value("v" + std::to_string(any(rng)));
        } else {
            params[p->index] = existing(relation, column, type, rng);
        }
    };
    for (const auto& f : stmt.filters) {
        const sql::TableRef* t = stmt.resolve(f.column);
        if (t) fill(f.operand, t->relation, f.column.name, false);
    }
    if (stmt.kind == sql::StatementKind::Insert) {
        for (const auto& v : stmt.values) fill(v.value, stmt.target(), v.column, true);
    }
    if (stmt.kind == sql::StatementKind::Update) {
        for (const auto& a : stmt.assignments) fill(a.value, stmt.target(), a.column, true);
    }
    for (auto& p : params) {
        if (is_null(p)) p = std::int64_t{1};
    }
    return params;
}

std::size_t RunReport::errors() const {
    std::size_t n = 0;
    for (const auto& s : per_statement) n += s.errors;
    return n;
}

std::string RunReport::csv() const {
    std::string out = "statement,sql,count,errors,mean_ms,stderr_ms\n";
    char buf[128];
    for (std::size_t i = 0; i < per_statement.size(); ++i) {
        const auto& s = per_statement[i];
        std::snprintf(buf, sizeof buf, ",%zu,%zu,%.6f,%.6f\n", s.count, s.errors, s.timing.mean_ms,
                      s.timing.stderr_ms);
        out += "s" + std::to_string(i + 1) + "," + csv_quote(s.sql) + buf;
    }
    return out;
}

RunReport run_workload(Database& db, std::span<const sql::Statement> workload, const RunOptions& options) {
    RunReport report;
    if (workload.empty()) return report;
    ParamBinder binder(db);
    const std::size_t n = workload.size();
    const std::size_t threads = std::max<std::size_t>(1, options.threads);

    std::vector<engine::QueryPlan> plans(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!workload[i].is_write()) plans[i] = db.prepare(workload[i]);
    }

    std::vector<std::vector<double>> samples(n);
    std::vector<std::size_t> errors(n, 0);
    std::vector<std::string> first_error(n);
    std::mutex merge;

    auto worker = [&](std::size_t t) {
        std::mt19937_64 rng(options.seed + t);
        std::vector<std::vector<double>> local(n);
        std::vector<std::size_t> local_errors(n, 0);
        std::vector<std::string> local_first(n);
        engine::Engine eng = db.engine();
        for (std::size_t k = t; k < options.statements; k += threads) {
            std::size_t i = k % n;
            auto params = binder.bind(workload[i], rng);
            auto start = Clock::now();
            try {
                if (workload[i].is_write()) {
                    db.write(workload[i], params);
                } else {
                    eng.execute(plans[i], params);
                }
            } catch (const std::exception& e) {
                if (local_errors[i]++ == 0) local_first[i] = e.what();
                continue;
            }
            local[i].push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
        }
        std::lock_guard<std::mutex> g(merge);
        for (std::size_t i = 0; i < n; ++i) {
            samples[i].insert(samples[i].end(), local[i].begin(), local[i].end());
            if (local_errors[i] && first_error[i].empty()) first_error[i] = local_first[i];
            errors[i] += local_errors[i];
        }
    };

    auto start = Clock::now();
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
    report.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();

    for (std::size_t i = 0; i < n; ++i) {
        StatementStats s;
        s.sql = sql::render_statement(workload[i]);
        s.count = samples[i].size() + errors[i];
        s.errors = errors[i];
        s.first_error = first_error[i];
        s.timing = bench::summarize(samples[i]);
        report.per_statement.push_back(std::move(s));
    }
    return report;
}

}  // namespace synergy::runner
