#include <gtest/gtest.h>

#include "support.hpp"
#include "synergy/design.hpp"
#include "synergy/errors.hpp"
#include "synergy/fixtures.hpp"
#include "synergy/viewselect.hpp"

using namespace synergy;
using namespace synergy::viewselect;

namespace {

Design company_design(const std::string& extra = "") {
    auto f = fixtures::company();
    return build_design(f.schema(), sql::parse_workload(f.workload_text + extra));
}

std::vector<std::string> signatures(const std::vector<viewgen::Path>& paths) {
    std::vector<std::string> out;
    for (const auto& p : paths) out.push_back(p.signature());
    return out;
}

}  // namespace

TEST(Marking, SelectsTreePathsCoveredByJoins) {
    Design d = company_design();
    const auto& trees = d.generation.trees;
    EXPECT_EQ(signatures(select_views_for_query(d.input[0], trees)), std::vector<std::string>{"Address->Employee"});
    EXPECT_EQ(signatures(select_views_for_query(d.input[1], trees)), std::vector<std::string>{"Employee->Works_On"});
    EXPECT_EQ(signatures(select_views_for_query(d.input[2], trees)), std::vector<std::string>{"Employee->Works_On"});
    auto office = sql::parse_statement("SELECT * FROM Employee AS e, Address AS a WHERE a.AID = e.EOffice_AID");
    EXPECT_TRUE(select_views_for_query(office, trees).empty());
    auto self = sql::parse_statement("SELECT * FROM Employee AS a, Employee AS b WHERE a.EID = b.EID");
    EXPECT_THROW(select_views_for_query(self, trees), UnsupportedQuery);
}

TEST(Selection, DeduplicatesViewsAcrossQueries) {
    Design d = company_design();
    ASSERT_EQ(d.views().size(), 2u);
    EXPECT_EQ(d.views()[0].name, "V_Address_Employee");
    EXPECT_EQ(d.views()[0].provenance, std::vector<std::size_t>{0});
    EXPECT_EQ(d.views()[1].name, "V_Employee_Works_On");
    EXPECT_EQ(d.views()[1].provenance, (std::vector<std::size_t>{1, 2}));
    EXPECT_TRUE(d.selection.rejected.empty());
    EXPECT_NE(d.find_view("V_Employee_Works_On"), nullptr);
    EXPECT_EQ(d.find_view("V_Address_Employee_Works_On"), nullptr);
}

TEST(Rewrite, ReplacesJoinedRelationsByView) {
    Design d = company_design();
    EXPECT_EQ(sql::render_statement(d.rewritten[1]),
              "SELECT * FROM Department AS d, V_Employee_Works_On AS v1 WHERE d.DNo = v1.E_DNo AND d.DNo = ?");
    auto projected = sql::parse_statement(
        "SELECT e.EName, wo.Hours FROM Employee AS e, Works_On AS wo WHERE e.EID = wo.WO_EID AND e.Salary > 10");
    EXPECT_EQ(sql::render_statement(d.rewrite(projected)),
              "SELECT v1.EName, v1.Hours FROM V_Employee_Works_On AS v1 WHERE v1.Salary > 10");
    // a query no view serves passes through
    auto plain = sql::parse_statement("SELECT * FROM Address AS a WHERE a.AID = 1");
    EXPECT_EQ(d.rewrite(plain), plain);
}

TEST(Rewrite, RefusesAmbiguousStar) {
    SchemaDef s = parse_schema_json(R"({"relations": [
      {"name": "P", "attrs": [["PID", "int"], ["Tag", "string"]], "pk": ["PID"]},
      {"name": "C", "attrs": [["CID", "int"], ["C_PID", "int"], ["Tag", "string"]], "pk": ["CID"],
       "fks": [{"name": "f", "attrs": ["C_PID"], "references": "P"}]}], "roots": ["P"]})");
    auto star = sql::parse_workload("SELECT * FROM P AS p, C AS c WHERE p.PID = c.C_PID\n");
    Design d = build_design(s, star);
    EXPECT_TRUE(d.views().empty());
    ASSERT_EQ(d.selection.rejected.size(), 1u);
    EXPECT_EQ(d.rewritten[0], star[0]);

    ASSERT_EQ(d.generation.candidates.size(), 1u);
    ViewDef v{d.generation.candidates[0], d.generation.candidates[0].name(), {0}};
    const ViewDef* selected[] = {&v};
    EXPECT_THROW(rewrite_query(star[0], selected), AmbiguityError);
    auto named = sql::parse_statement("SELECT p.Tag FROM P AS p, C AS c WHERE p.PID = c.C_PID");
    EXPECT_THROW(rewrite_query(named, selected), AmbiguityError);
    auto clean = sql::parse_statement("SELECT c.CID FROM P AS p, C AS c WHERE p.PID = c.C_PID");
    EXPECT_EQ(sql::render_statement(rewrite_query(clean, selected)), "SELECT v1.CID FROM V_P_C AS v1");
}

TEST(Indexes, ViewIndexOnlyWhenFilterUnserved) {
    Design d = company_design();
    ASSERT_EQ(d.view_indexes.size(), 1u);
    const IndexDef& ix = d.view_indexes[0];
    EXPECT_EQ(ix.name, "IX_V_Employee_Works_On_Hours");
    EXPECT_EQ(ix.base, "V_Employee_Works_On");
    EXPECT_EQ(ix.indexed_on, std::vector<std::string>{"Hours"});
    EXPECT_EQ(ix.attributes.size(), 9u);  // covers every view attribute
    // q1 filters on EID, the view key, so V_Address_Employee needs none
    EXPECT_TRUE(d.indexes_on("V_Address_Employee").empty());
    std::vector<IndexDef> existing = d.view_indexes;
    EXPECT_TRUE(recommend_view_indexes(d.rewritten, d.views(), existing).empty());
}

TEST(Indexes, MaintenanceIndexPerUpdatedInnerRelation) {
    Design none = company_design();
    EXPECT_TRUE(none.maintenance_indexes.empty());
    Design d = company_design("UPDATE Employee SET Salary = ? WHERE EID = ?\nUPDATE Works_On SET Hours = ? WHERE WO_EID = ? AND WO_PNo = ?\n");
    ASSERT_EQ(d.maintenance_indexes.size(), 1u);
    const IndexDef& mx = d.maintenance_indexes[0];
    EXPECT_EQ(mx.name, maintenance_index_name(*d.find_view("V_Employee_Works_On"), "Employee"));
    EXPECT_EQ(mx.name, "MX_V_Employee_Works_On_Employee");
    EXPECT_EQ(mx.indexed_on, std::vector<std::string>{"EID"});
    const TableSpec& spec = d.catalog.at(mx.name);
    EXPECT_EQ(spec.key, (std::vector<std::string>{"EID", "WO_EID", "WO_PNo"}));
    EXPECT_EQ(spec.columns.size(), 3u);  // key-only
}

TEST(Catalog, HoldsEveryPhysicalTable) {
    Design d = company_design();
    for (const char* name : {"Address", "Employee", "V_Address_Employee", "V_Employee_Works_On",
                             "IX_V_Employee_Works_On_Hours", "LOCK_Address", "LOCK_Department"}) {
        EXPECT_NE(d.catalog.find(name), nullptr) << name;
    }
    EXPECT_EQ(d.catalog.at("V_Employee_Works_On").kind, TableKind::View);
    EXPECT_EQ(d.catalog.at("LOCK_Address").kind, TableKind::Lock);
    EXPECT_EQ(d.catalog.at("LOCK_Address").key, std::vector<std::string>{"AID"});
    EXPECT_NE(render_view_ddl(d).find("V_Employee_Works_On"), std::string::npos);
    EXPECT_NE(render_indexes(d).find("IX_V_Employee_Works_On_Hours"), std::string::npos);
}

// Rewriting preserves results: every random workload query, planned over
// views, matches the independent evaluator over base relations.
TEST(RewriteProperty, ViewsPreserveQueryResults) {
    std::size_t rewritten = 0;
    for (std::uint64_t seed = 100; seed < 115; ++seed) {
        auto rc = synergy::testing::random_case(seed, 120, 8);
        auto base = synergy::testing::snapshot_base(rc.db->design().schema, rc.db->store());
        for (const auto& q : rc.queries) {
            auto expect = synergy::testing::evaluate(rc.db->design().schema, q, base);
            auto got = synergy::testing::normalize(rc.db->query(q));
            if (!(rc.db->design().rewrite(q) == q)) ++rewritten;
            EXPECT_EQ(got, expect) << "seed " << seed << ": " << sql::render_statement(q) << "\nexpected "
                                   << synergy::testing::describe(expect) << "\ngot " << synergy::testing::describe(got);
        }
    }
    EXPECT_GT(rewritten, 10u);
}
