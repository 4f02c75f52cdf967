#include <gtest/gtest.h>

#include "support.hpp"
#include "synergy/bench.hpp"
#include "synergy/database.hpp"
#include "synergy/errors.hpp"
#include "synergy/fixtures.hpp"
#include "synergy/runner.hpp"

using namespace synergy;

namespace {

const std::string kWrites =
    "INSERT INTO Works_On (WO_EID, WO_PNo, Hours) VALUES (?, ?, ?)\n"
    "UPDATE Employee SET Salary = ?, EName = ? WHERE EID = ?\n"
    "DELETE FROM Works_On WHERE WO_EID = ? AND WO_PNo = ?\n"
    "INSERT INTO Project (PNo, PName) VALUES (?, ?)\n";

struct Dir {
    std::filesystem::path path = synergy::testing::temp_dir("db");
    ~Dir() { std::filesystem::remove_all(path); }
};

std::unique_ptr<Database> create(const Dir& dir, std::size_t scale = 15) {
    auto f = fixtures::company_project();
    DatabaseOptions o;
    o.fsync = false;
    auto db = Database::create(dir.path, f.schema_json, f.workload_text + kWrites, o);
    fixtures::populate("company-project", db->txn(), {scale, 3, 11});
    return db;
}

DatabaseOptions no_fsync() {
    DatabaseOptions o;
    o.fsync = false;
    return o;
}

synergy::testing::Bag all_rows(const Database& db, const std::string& text) {
    return synergy::testing::normalize(db.query(sql::parse_statement(text)));
}

}  // namespace

TEST(Database, ReopenRedoesCommittedStatements) {
    Dir dir;
    synergy::testing::Bag expect;
    {
        auto db = create(dir);
        db->execute("UPDATE Employee SET Salary = 4242, EName = 'emp-4242' WHERE EID = 2");
        db->execute("DELETE FROM Works_On WHERE WO_EID = 3 AND WO_PNo = 1");
        expect = all_rows(*db, "SELECT * FROM Employee AS e, Works_On AS wo WHERE e.EID = wo.WO_EID AND wo.Hours > 0");
    }
    ASSERT_TRUE(Database::exists(dir.path));
    auto db = Database::open(dir.path, no_fsync());
    EXPECT_GT(db->redone(), 0u);
    EXPECT_EQ(db->recovered(), 0u);
    EXPECT_TRUE(db->verify().ok()) << db->verify().render();
    EXPECT_EQ(all_rows(*db, "SELECT * FROM Employee AS e, Works_On AS wo WHERE e.EID = wo.WO_EID AND wo.Hours > 0"),
              expect);
}

TEST(Database, CheckpointPersistsSnapshotAndKeepsTxnIdsIncreasing) {
    Dir dir;
    std::uint64_t last_id = 0;
    {
        auto db = create(dir);
        db->meta()["note"] = "kept";
        db->checkpoint();
        EXPECT_TRUE(db->wal().records().empty());
        last_id = std::get<txn::TxnResult>(db->execute("INSERT INTO Project (PNo, PName) VALUES (501, 'p')")).txn_id;
    }
    auto db = Database::open(dir.path, no_fsync());
    EXPECT_EQ(db->redone(), 1u);
    EXPECT_EQ(db->meta().value("note", ""), "kept");
    EXPECT_EQ(all_rows(*db, "SELECT * FROM Project AS p WHERE p.PNo = 501").size(), 1u);
    auto next = std::get<txn::TxnResult>(db->execute("INSERT INTO Project (PNo, PName) VALUES (502, 'q')")).txn_id;
    EXPECT_GT(next, last_id);
    EXPECT_TRUE(db->verify().ok());
    EXPECT_THROW(Database::open(dir.path / "missing"), StorageError);
}

// The process dies mid-statement: nothing in memory survives, the reopened
// database redoes what committed and finishes what did not. Step 6 runs
// after the commit record, so only that crash leaves nothing pending.
TEST(Database, CrashedStatementCompletesOnReopen) {
    for (int crash : {1, 3, txn::kMidApply, 4, 5, 6}) {
        Dir dir;
        {
            auto db = create(dir);
            db->checkpoint();
            db->execute("INSERT INTO Works_On (WO_EID, WO_PNo, Hours) VALUES (4, 90, 3)");
            db->txn().set_fault_hook([crash](int step) {
                if (step == crash) throw txn::InjectedCrash(step);
            });
            EXPECT_THROW(db->execute("UPDATE Employee SET Salary = 31, EName = 'emp-31' WHERE EID = 4"),
                         txn::InjectedCrash);
        }
        auto db = Database::open(dir.path, no_fsync());
        EXPECT_EQ(db->recovered(), crash == 6 ? 0u : 1u) << crash;
        auto report = db->verify();
        EXPECT_TRUE(report.ok()) << crash << "\n" << report.render();
        auto rows = db->query(sql::parse_statement("SELECT e.Salary FROM Employee AS e WHERE e.EID = 4"));
        ASSERT_EQ(rows.rows.size(), 1u);
        EXPECT_EQ(rows.rows[0][0], Value(std::int64_t{31})) << crash;
        EXPECT_EQ(all_rows(*db, "SELECT * FROM Works_On AS wo WHERE wo.WO_EID = 4 AND wo.WO_PNo = 90").size(), 1u);
    }
}

TEST(Verify, DetectsDivergentViewsIndexesAndMarks) {
    DatabaseOptions o;
    o.durable = false;
    auto f = fixtures::company();
    auto db = Database::in_memory(f.schema(), f.workload(), o);
    fixtures::populate("company", db->txn(), {10, 2, 4});
    ASSERT_TRUE(db->verify().ok());

    auto& store = db->store();
    auto first = [&](const std::string& table) { return *store.scan(table).next(); };
    auto view_row = first("V_Employee_Works_On");
    std::vector<storage::Cell> wrong{{"Salary", std::int64_t{-1}}};
    store.put("V_Employee_Works_On", view_row.key(), wrong);
    store.erase("IX_V_Employee_Works_On_Hours", first("IX_V_Employee_Works_On_Hours").key());
    store.table("Address").mark(first("Address").key(), true);

    VerifyReport r = db->verify();
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(r.total_dirty(), 1u);
    std::size_t mismatched = 0, missing = 0;
    for (const auto& t : r.tables) {
        if (t.table == "V_Employee_Works_On") mismatched += t.mismatched;
        if (t.table == "IX_V_Employee_Works_On_Hours") missing += t.missing;
    }
    EXPECT_EQ(mismatched, 1u);
    EXPECT_EQ(missing, 1u);
    std::string text = r.render();
    EXPECT_EQ(text.rfind("table,kind,expected,actual,missing,extra,mismatched,dirty\n", 0), 0u);
    EXPECT_NE(text.find("FAIL: "), std::string::npos);
}

TEST(Runner, MixedWorkloadKeepsStoreConsistent) {
    DatabaseOptions o;
    o.durable = false;
    auto f = fixtures::company_project();
    auto db = Database::in_memory(f.schema(), sql::parse_workload(f.workload_text + kWrites), o);
    fixtures::populate("company-project", db->txn(), {20, 3, 8});
    runner::RunOptions ro;
    ro.threads = 3;
    ro.statements = 700;
    auto report = runner::run_workload(*db, db->design().input, ro);
    ASSERT_EQ(report.per_statement.size(), db->design().input.size());
    std::size_t total = 0;
    for (const auto& s : report.per_statement) {
        total += s.count;
        EXPECT_EQ(s.errors, 0u) << s.sql << ": " << s.first_error;
    }
    EXPECT_EQ(total, 700u);
    EXPECT_EQ(report.csv().rfind("statement,sql,count,errors,mean_ms,stderr_ms\n", 0), 0u);
    EXPECT_TRUE(db->verify().ok()) << db->verify().render();
}

TEST(Bench, JoinAndLockBenchmarksReport) {
    DatabaseOptions o;
    o.durable = false;
    auto f = fixtures::tpcw_micro();
    auto db = Database::in_memory(f.schema(), f.workload(), o);
    fixtures::populate("tpcw-micro", db->txn(), {20, 3, 1});
    bench::JoinBenchOptions jo;
    jo.repeats = 3;
    jo.batch = 5;
    jo.scale = 20;
    auto join = bench::bench_join(*db, 1, bench::JoinMode::Join, jo);
    auto view = bench::bench_join(*db, 1, bench::JoinMode::View, jo);
    EXPECT_EQ(join.query, "Q2");
    EXPECT_EQ(join.rows, 9u);
    EXPECT_EQ(view.rows, 9u);
    EXPECT_EQ(join.timing.samples, 3u);
    EXPECT_NE(join.plan, view.plan);
    EXPECT_EQ(bench::join_csv_row(view).rfind("20,Q2,view,", 0), 0u);
    EXPECT_THROW(bench::bench_join(*db, 7, bench::JoinMode::Join, jo), InvalidStatement);

    std::vector<std::size_t> counts{1, 10};
    auto locks = bench::bench_locks(counts, 2);
    ASSERT_EQ(locks.size(), 2u);
    EXPECT_EQ(locks[1].count, 10u);
    EXPECT_EQ(locks[1].timing.samples, 2u);

    std::vector<double> ms{1, 2, 3, 4};
    auto t = bench::summarize(ms);
    EXPECT_DOUBLE_EQ(t.mean_ms, 2.5);
    EXPECT_NEAR(t.stderr_ms, 0.645497, 1e-6);
}
