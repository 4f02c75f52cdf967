// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// fails. Tolerances are the constants below.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "support.hpp"
#include "synergy/bench.hpp"
#include "synergy/database.hpp"
#include "synergy/errors.hpp"
#include "synergy/fixtures.hpp"
#include "synergy/maintenance.hpp"

using namespace synergy;
using Clock = std::chrono::steady_clock;

namespace {

// 1-3: mixed workload
constexpr std::size_t kConsistencyScale = 1000;
constexpr std::size_t kConsistencyRatio = 10;
constexpr std::size_t kWriterThreads = 8;
constexpr std::size_t kWorkloadStatements = 10000;
constexpr std::size_t kMonitorReads = 100000;
constexpr double kConsistencyBudgetS = 300;
// 5: join vs view
constexpr std::size_t kBenchScale = 5000;
constexpr std::size_t kBenchRatio = 10;
constexpr double kMinSpeedup = 2.0;
constexpr double kBenchBudgetS = 120;
// 6: lock overhead
constexpr double kLockRatioLo = 5.0;
constexpr double kLockRatioHi = 20.0;
// 7: engine vs evaluator
constexpr std::size_t kOracleCases = 25;
constexpr std::size_t kOracleQueries = 8;
constexpr std::size_t kOracleRows = 200;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

bool all_passed = true;

void report(int n, const char* name, Outcome& o) {
    all_passed = all_passed && o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << n << " " << name << ":" << o.detail.str() << std::endl;
}

// ---- 1, 2, 3 ----

const char* const kWriteTemplates[] = {
    "INSERT INTO Address (AID, Street, City) VALUES (?, ?, ?)",
    "INSERT INTO Employee (EID, EName, Salary, EHome_AID, EOffice_AID, E_DNo) VALUES (?, ?, ?, ?, ?, ?)",
    "INSERT INTO Works_On (WO_EID, WO_PNo, Hours) VALUES (?, ?, ?)",
    "INSERT INTO Project (PNo, PName) VALUES (?, ?)",
    "DELETE FROM Works_On WHERE WO_EID = ? AND WO_PNo = ?",
    "DELETE FROM Project WHERE PNo = ?",
    "UPDATE Employee SET Salary = ?, EName = ? WHERE EID = ?",
    "UPDATE Works_On SET Hours = ? WHERE WO_EID = ? AND WO_PNo = ?",
    "UPDATE Address SET City = ? WHERE AID = ?",
    "UPDATE Department SET DName = ? WHERE DNo = ?",
    "UPDATE Project SET PName = ? WHERE PNo = ?",
};
constexpr int kTemplateWeights[] = {1, 1, 2, 1, 2, 1, 4, 2, 1, 1, 1};

std::string workload_text() {
    std::string text = fixtures::company_project().workload_text;
    for (const char* w : kWriteTemplates) text += std::string(w) + "\n";
    return text;
}

// Parameters for each template. Inserts reference parents from the
// populated range and take fresh keys, so every insert is parent-first;
// Employee rows keep EName == "emp-<Salary>" so torn reads are detectable.
class WriteGen {
public:
    WriteGen(std::size_t scale, std::size_t ratio)
        : addresses_(static_cast<std::int64_t>(scale)),
          employees_(addresses_ * static_cast<std::int64_t>(ratio)),
          depts_(std::max<std::int64_t>(1, addresses_ / static_cast<std::int64_t>(ratio))),
          ratio_(static_cast<std::int64_t>(ratio)),
          next_aid_(addresses_ + 1),
          next_eid_(employees_ + 1),
          next_pno_(addresses_ + 1),
          next_wo_pno_(ratio_ + 1) {}

    std::vector<Value> params(std::size_t t, std::mt19937_64& rng) {
        auto pick = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };
        std::int64_t salary = pick(1000, 9999);
        Value ename = "emp-" + std::to_string(salary);
        switch (t) {
        case 0: return {next_aid_++, std::string("street"), std::string("Salem")};
        case 1: return {next_eid_++, ename, salary, pick(1, addresses_), pick(1, addresses_), pick(1, depts_)};
        case 2: return {pick(1, employees_), next_wo_pno_++, pick(1, 40)};
        case 3: return {next_pno_++, std::string("new-project")};
        case 4: return {pick(1, employees_), pick(1, ratio_)};
        case 5: return {pick(1, addresses_)};
        case 6: return {salary, ename, pick(1, employees_)};
        case 7: return {pick(1, 40), pick(1, employees_), pick(1, ratio_)};
        case 8: return {std::string("Reno"), pick(1, addresses_)};
        case 9: return {"dept-x" + std::to_string(salary), pick(1, depts_)};
        default: return {"project-x" + std::to_string(salary), pick(1, addresses_)};
        }
    }

    std::int64_t employees() const { return employees_; }

private:
    std::int64_t addresses_, employees_, depts_, ratio_;
    std::atomic<std::int64_t> next_aid_, next_eid_, next_pno_, next_wo_pno_;
};

struct WriteRecord {
    std::string relation;
    txn::TxnResult result;
};

std::size_t torn_rows(const engine::ResultSet& rs) {
    std::size_t torn = 0;
    auto ename = std::find(rs.columns.begin(), rs.columns.end(), "EName") - rs.columns.begin();
    auto salary = std::find(rs.columns.begin(), rs.columns.end(), "Salary") - rs.columns.begin();
    for (const auto& c : rs.columns) {
        if (c == storage::kDirtyColumn) ++torn;
    }
    for (const auto& row : rs.rows) {
        if (static_cast<std::size_t>(ename) >= row.size() || static_cast<std::size_t>(salary) >= row.size()) {
            ++torn;
            continue;
        }
        const auto* s = std::get_if<std::int64_t>(&row[salary]);
        const auto* n = std::get_if<std::string>(&row[ename]);
        if (!s || !n || *n != "emp-" + std::to_string(*s)) ++torn;
    }
    return torn;
}

void consistency_criteria() {
    Outcome c1, c2, c3;
    const auto t0 = Clock::now();
    auto dir = synergy::testing::temp_dir("acceptance");
    DatabaseOptions options;
    options.fsync = false;
    options.max_read_retries = 1000000;
    auto f = fixtures::company_project();
    auto db = Database::create(dir, f.schema_json, workload_text(), options);
    fixtures::populate("company-project", db->txn(), {kConsistencyScale, kConsistencyRatio, 42});
    db->checkpoint();
    const double populate_s = seconds_since(t0);
    c1.check(db->verify().ok(), "verify after populate");

    std::vector<sql::Statement> templates;
    for (const char* w : kWriteTemplates) templates.push_back(sql::parse_statement(w));
    const auto& workload = db->design().input;
    const auto q_employee = workload[0];  // by EID, over V_Address_Employee
    const auto q_hours = workload[2];  // by Hours, over IX_V_Employee_Works_On_Hours

    WriteGen gen(kConsistencyScale, kConsistencyRatio);
    std::atomic<std::size_t> issued{0};
    std::atomic<std::size_t> done{0};
    std::atomic<std::size_t> errors{0};
    std::atomic<std::size_t> reads{0};
    std::atomic<bool> writers_active{true};
    std::mutex records_mu;
    std::vector<WriteRecord> records;
    std::string first_error;
    const auto acquisitions_before = db->txn().locks().acquisitions();

    // Writers wait for the monitor to keep pace, so at least kMonitorReads
    // reads interleave with the workload on any core count.
    const std::size_t reads_per_write = kMonitorReads / kWorkloadStatements + 1;
    std::discrete_distribution<std::size_t> choose(std::begin(kTemplateWeights), std::end(kTemplateWeights));
    auto writer = [&](std::size_t id) {
        std::mt19937_64 rng(1000 + id);
        auto local_choose = choose;
        std::vector<WriteRecord> mine;
        for (;;) {
            std::size_t n = issued.fetch_add(1);
            if (n >= kWorkloadStatements) break;
            while (reads.load() < n * reads_per_write) std::this_thread::sleep_for(std::chrono::microseconds(200));
            std::size_t t = local_choose(rng);
            auto params = gen.params(t, rng);
            try {
                mine.push_back({templates[t].target(), db->write(templates[t], params)});
            } catch (const std::exception& e) {
                if (errors.fetch_add(1) == 0) {
                    std::lock_guard g(records_mu);
                    first_error = std::string(kWriteTemplates[t]) + ": " + e.what();
                }
            }
            done.fetch_add(1);
        }
        std::lock_guard g(records_mu);
        records.insert(records.end(), mine.begin(), mine.end());
    };

    std::size_t torn = 0, timeouts = 0, rows_seen = 0, restarts = 0;
    std::thread monitor([&] {
        std::mt19937_64 rng(7);
        std::uniform_int_distribution<std::int64_t> eid(1, gen.employees());
        std::uniform_int_distribution<std::int64_t> hours(1, 40);
        while (writers_active.load()) {
            std::size_t n = reads.load();
            bool wide = n % 50 == 49;
            std::vector<Value> p{wide ? Value(hours(rng)) : Value(eid(rng))};
            try {
                engine::ExecStats stats;
                auto rs = db->query(wide ? q_hours : q_employee, p, true, &stats);
                restarts += stats.restarts;
                torn += torn_rows(rs);
                rows_seen += rs.rows.size();
            } catch (const DirtyReadTimeout&) {
                ++timeouts;
            }
            reads.fetch_add(1);
        }
    });
    const auto w0 = Clock::now();
    std::vector<std::thread> writers;
    for (std::size_t i = 0; i < kWriterThreads; ++i) writers.emplace_back(writer, i);
    for (auto& w : writers) w.join();
    writers_active = false;
    monitor.join();
    const double workload_s = seconds_since(w0);

    auto after_workload = db->verify();
    c1.check(errors == 0, std::to_string(errors.load()) + " statement errors, first: " + first_error);
    c1.check(after_workload.ok(), "verify after workload: " + after_workload.render());

    // single lock per write
    std::size_t in_tree = 0, out_of_tree = 0, locked = 0, bad_locks = 0;
    for (const auto& r : records) {
        bool tree = db->design().generation.tree_of(r.relation) != nullptr;
        const auto& res = r.result;
        locked += static_cast<std::size_t>(res.locks_acquired);
        if (tree) {
            if (!res.no_op && !res.orphan) ++in_tree;
            bool expects_lock = !res.no_op && !res.orphan;
            if ((expects_lock && (res.locks_acquired != 1 || !res.root)) || res.locks_acquired > 1 ||
                res.locks_acquired != (res.root ? 1 : 0)) {
                ++bad_locks;
            }
        } else {
            ++out_of_tree;
            if (res.locks_acquired != 0 || res.root) ++bad_locks;
        }
    }
    const auto acquisitions = db->txn().locks().acquisitions() - acquisitions_before;
    c2.check(records.size() + errors == kWorkloadStatements, "every statement accounted for");
    c2.check(bad_locks == 0, std::to_string(bad_locks) + " writes with a wrong lock count");
    c2.check(acquisitions == locked, "lock manager counted " + std::to_string(acquisitions) + " acquisitions, writes " +
                                         std::to_string(locked));
    c2.check(in_tree > 0 && out_of_tree > 0, "both kinds of write exercised");
    c2.detail << " " << in_tree << " in-tree writes with 1 lock each, " << out_of_tree
              << " out-of-tree writes with 0, " << acquisitions << " acquisitions";

    c3.check(reads >= kMonitorReads, "only " + std::to_string(reads.load()) + " reads");
    c3.check(torn == 0, std::to_string(torn) + " dirty or torn rows");
    c3.check(timeouts == 0, std::to_string(timeouts) + " reads timed out");
    c3.detail << " " << reads.load() << " view reads (" << rows_seen << " rows, " << restarts << " restarts) during "
              << kWorkloadStatements << " writes, " << torn << " violations";

    // crash at every step, reopen, recover, verify
    db->checkpoint();
    const int steps[] = {1, 2, 3, txn::kMidApply, 4, 5, 6};
    const char* const crash_writes[] = {
        "INSERT INTO Works_On (WO_EID, WO_PNo, Hours) VALUES (11, 900001, 5)",
        "UPDATE Employee SET Salary = 1234, EName = 'emp-1234' WHERE EID = 12",
        "DELETE FROM Works_On WHERE WO_EID = 13 AND WO_PNo = 1",
        "UPDATE Works_On SET Hours = 39 WHERE WO_EID = 14 AND WO_PNo = 2",
        "INSERT INTO Employee (EID, EName, Salary, EHome_AID, EOffice_AID, E_DNo) VALUES (900001, 'emp-5', 5, 3, 4, 1)",
        "UPDATE Address SET City = 'Quito' WHERE AID = 5",
        "UPDATE Department SET DName = 'crashed' WHERE DNo = 2",
    };
    std::size_t crashes = 0, recovered = 0;
    for (std::size_t i = 0; i < std::size(steps); ++i) {
        const int step = steps[i];
        db->txn().set_fault_hook([step](int s) {
            if (s == step) throw txn::InjectedCrash(s);
        });
        try {
            db->execute(crash_writes[i]);
        } catch (const txn::InjectedCrash&) {
            ++crashes;
        }
        db.reset();
        db = Database::open(dir, options);
        recovered += db->recovered();
        auto r = db->verify();
        c1.check(r.ok(), "verify after crash at step " + std::to_string(step) + ": " + r.render());
    }
    c1.check(crashes == std::size(steps), "every injected crash fired");
    c1.check(recovered == std::size(steps) - 1, std::to_string(recovered) + " statements recovered");
    auto hours = db->query(sql::parse_statement("SELECT wo.Hours FROM Works_On AS wo WHERE wo.WO_EID = 14 AND wo.WO_PNo = 2"));
    auto salary = db->query(sql::parse_statement("SELECT e.Salary FROM Employee AS e WHERE e.EID = 12"));
    c1.check(hours.rows.size() == 1 && hours.rows[0][0] == Value(std::int64_t{39}), "crashed update applied");
    c1.check(salary.rows.size() == 1 && salary.rows[0][0] == Value(std::int64_t{1234}), "crashed update applied");
    const double total_s = seconds_since(t0);
    c1.check(total_s < kConsistencyBudgetS, "runtime " + std::to_string(total_s) + " s");
    char buf[200];
    std::snprintf(buf, sizeof buf, " populate %.1f s, workload %.1f s, %zu crashes recovered, total %.1f s", populate_s,
                  workload_s, recovered, total_s);
    c1.detail << buf;
    report(1, "view consistency", c1);
    report(2, "single lock per write", c2);
    report(3, "read committed view reads", c3);
    db.reset();
    std::filesystem::remove_all(dir);
}

// ---- 4 ----

void golden_criterion() {
    Outcome o;
    auto f = fixtures::company();
    const std::string golden = synergy::testing::read_text(synergy::testing::golden_path("company_report.txt"));
    o.check(!golden.empty(), "golden file readable");
    for (int run = 0; run < 3; ++run) {
        Design d = build_design(f.schema(), f.workload());
        o.check(render_report(d) == golden, "report differs from golden on run " + std::to_string(run));
        const auto& dropped = d.generation.dag.dropped;
        bool office_dropped = dropped.size() == 1 && dropped[0].parent == "Address" &&
                              dropped[0].parent_key == std::vector<std::string>{"AID"} &&
                              dropped[0].child_fk == std::vector<std::string>{"EOffice_AID"};
        o.check(office_dropped, "edge (AID, EOffice_AID) dropped");
    }
    o.detail << " 3 runs byte-identical to golden, (AID, EOffice_AID) dropped";
    report(4, "company golden pipeline", o);
}

// ---- 5 ----

void speedup_criterion() {
    Outcome o;
    const auto t0 = Clock::now();
    auto f = fixtures::tpcw_micro();
    DatabaseOptions options;
    options.durable = false;
    auto db = Database::in_memory(f.schema(), f.workload(), options);
    fixtures::populate("tpcw-micro", db->txn(), {kBenchScale, kBenchRatio, 42});
    const double populate_s = seconds_since(t0);
    bench::JoinBenchOptions jo;
    jo.scale = kBenchScale;
    double speedup[2] = {0, 0};
    char buf[200];
    for (std::size_t q = 0; q < 2; ++q) {
        auto join = bench::bench_join(*db, q, bench::JoinMode::Join, jo);
        auto view = bench::bench_join(*db, q, bench::JoinMode::View, jo);
        o.check(join.rows == view.rows, "same result size in both modes");
        speedup[q] = join.timing.mean_ms / view.timing.mean_ms;
        std::snprintf(buf, sizeof buf, " Q%zu join %.4f ms view %.4f ms speedup %.2f;", q + 1, join.timing.mean_ms,
                      view.timing.mean_ms, speedup[q]);
        o.detail << buf;
        o.check(speedup[q] >= kMinSpeedup, "Q" + std::to_string(q + 1) + " speedup below 2");
    }
    o.check(speedup[1] > speedup[0], "Q2 speedup not above Q1");
    const double total_s = seconds_since(t0);
    std::snprintf(buf, sizeof buf, " populate %.1f s, total %.1f s", populate_s, total_s);
    o.detail << buf;
    o.check(total_s < kBenchBudgetS, "runtime over budget");
    report(5, "view vs join speedup", o);
}

// ---- 6 ----

void lock_criterion() {
    Outcome o;
    const std::size_t counts[] = {10, 100, 1000};
    auto rows = bench::bench_locks(counts, 10);
    char buf[200];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, " %zu locks %.4f ms;", r.count, r.timing.mean_ms);
        o.detail << buf;
    }
    o.check(rows.size() == 3, "three counts timed");
    if (rows.size() == 3) {
        o.check(rows[0].timing.mean_ms < rows[1].timing.mean_ms && rows[1].timing.mean_ms < rows[2].timing.mean_ms,
                "time not increasing with count");
        double ratio = rows[2].timing.mean_ms / rows[1].timing.mean_ms;
        std::snprintf(buf, sizeof buf, " 1000/100 ratio %.2f", ratio);
        o.detail << buf;
        o.check(ratio >= kLockRatioLo && ratio <= kLockRatioHi, "ratio outside [5, 20]");
    }
    report(6, "lock overhead trend", o);
}

// ---- 7 ----

void oracle_criterion() {
    Outcome o;
    std::size_t queries = 0, mismatches = 0, rewritten = 0;
    for (std::uint64_t seed = 5000; seed < 5000 + kOracleCases; ++seed) {
        auto rc = synergy::testing::random_case(seed, kOracleRows, kOracleQueries);
        const auto& schema = rc.db->design().schema;
        auto base = synergy::testing::snapshot_base(schema, rc.db->store());
        for (const auto& q : rc.queries) {
            ++queries;
            auto expect = synergy::testing::evaluate(schema, q, base);
            if (!(rc.db->design().rewrite(q) == q)) ++rewritten;
            for (bool rewrite : {false, true}) {
                if (synergy::testing::normalize(rc.db->query(q, {}, rewrite)) != expect) {
                    if (mismatches++ == 0) o.detail << " first mismatch seed " << seed << ": " << sql::render_statement(q);
                }
            }
        }
    }
    o.check(queries == kOracleCases * kOracleQueries, "query count");
    o.check(mismatches == 0, std::to_string(mismatches) + " mismatches");
    o.detail << " " << queries << " queries (" << rewritten << " served by views), both modes equal the evaluator";
    report(7, "engine vs evaluator", o);
}

// ---- 8 ----

class CountingReader : public maintenance::Reader {
public:
    explicit CountingReader(const storage::Store& store) : inner_(store) {}
    std::optional<storage::Row> get(std::string_view table, std::string_view key) override {
        ++reads;
        return inner_.get(table, key);
    }
    std::vector<storage::Row> scan(std::string_view table, const storage::KeyRange& range) override {
        ++reads;
        return inner_.scan(table, range);
    }
    int reads = 0;

private:
    maintenance::StoreReader inner_;
};

void read_count_criterion() {
    Outcome o;
    const char* schema = R"({"relations": [
      {"name": "A", "attrs": [["AID", "int"], ["AV", "int"]], "pk": ["AID"]},
      {"name": "B", "attrs": [["BID", "int"], ["B_AID", "int"]], "pk": ["BID"],
       "fks": [{"name": "fb", "attrs": ["B_AID"], "references": "A"}]},
      {"name": "C", "attrs": [["CID", "int"], ["C_BID", "int"]], "pk": ["CID"],
       "fks": [{"name": "fc", "attrs": ["C_BID"], "references": "B"}]},
      {"name": "D", "attrs": [["DID", "int"], ["D_CID", "int"]], "pk": ["DID"],
       "fks": [{"name": "fd", "attrs": ["D_CID"], "references": "C"}]}], "roots": ["A"]})";
    const char* workload =
        "SELECT * FROM A AS a, B AS b WHERE a.AID = b.B_AID AND a.AID = ?\n"
        "SELECT * FROM A AS a, B AS b, C AS c WHERE a.AID = b.B_AID AND b.BID = c.C_BID AND a.AID = ?\n"
        "SELECT * FROM A AS a, B AS b, C AS c, D AS d WHERE a.AID = b.B_AID AND b.BID = c.C_BID AND "
        "c.CID = d.D_CID AND a.AID = ?\n";
    DatabaseOptions options;
    options.durable = false;
    auto db = Database::in_memory(parse_schema_json(schema), sql::parse_workload(workload), options);
    db->execute("INSERT INTO A (AID, AV) VALUES (1, 7)");
    db->execute("INSERT INTO B (BID, B_AID) VALUES (1, 1)");
    db->execute("INSERT INTO C (CID, C_BID) VALUES (1, 1)");
    db->execute("INSERT INTO D (DID, D_CID) VALUES (1, 1)");
    struct Case {
        const char* view;
        maintenance::Tuple row;
        int k;
    };
    const Case cases[] = {
        {"V_A_B", {{"BID", std::int64_t{2}}, {"B_AID", std::int64_t{1}}}, 2},
        {"V_A_B_C", {{"CID", std::int64_t{2}}, {"C_BID", std::int64_t{1}}}, 3},
        {"V_A_B_C_D", {{"DID", std::int64_t{2}}, {"D_CID", std::int64_t{1}}}, 4},
    };
    for (const auto& c : cases) {
        const auto* view = db->design().find_view(c.view);
        o.check(view != nullptr, std::string(c.view) + " selected");
        if (!view) continue;
        CountingReader reader(db->store());
        auto t = maintenance::build_insert_view_tuple(*view, c.row, reader);
        o.check(t && t->at("AV") == Value(std::int64_t{7}), std::string(c.view) + " tuple built");
        o.check(reader.reads == c.k - 1, std::string(c.view) + " read " + std::to_string(reader.reads));
        o.detail << " k=" << c.k << ": " << reader.reads << " reads;";
    }
    report(8, "maintenance read count", o);
}

}  // namespace

// With arguments, runs only the named criteria: `acceptance 5 6`. Criteria
// 1-3 share one workload and run together.
int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    auto wanted = [&](std::initializer_list<int> ns) {
        if (only.empty()) return true;
        return std::any_of(ns.begin(), ns.end(), [&](int n) { return only.count(n) > 0; });
    };
    try {
        if (wanted({1, 2, 3})) consistency_criteria();
        if (wanted({4})) golden_criterion();
        if (wanted({5})) speedup_criterion();
        if (wanted({6})) lock_criterion();
        if (wanted({7})) oracle_criterion();
        if (wanted({8})) read_count_criterion();
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
        return 1;
    }
    return all_passed ? 0 : 1;
}
