#include "synergy/fixtures.hpp"

#include <random>

#include "synergy/errors.hpp"

namespace synergy::fixtures {

namespace {

constexpr std::string_view kCompanyRelations = R"(
    {"name": "Address", "attrs": [["AID", "int"], ["Street", "string"], ["City", "string"]], "pk": ["AID"]},
    {"name": "Department", "attrs": [["DNo", "int"], ["DName", "string"]], "pk": ["DNo"]},
    {"name": "Employee",
     "attrs": [["EID", "int"], ["EName", "string"], ["Salary", "int"],
               ["EHome_AID", "int"], ["EOffice_AID", "int"], ["E_DNo", "int"]],
     "pk": ["EID"],
     "fks": [{"name": "fk_home", "attrs": ["EHome_AID"], "references": "Address"},
             {"name": "fk_office", "attrs": ["EOffice_AID"], "references": "Address"},
             {"name": "fk_dept", "attrs": ["E_DNo"], "references": "Department"}]},
    {"name": "Works_On", "attrs": [["WO_EID", "int"], ["WO_PNo", "int"], ["Hours", "int"]],
     "pk": ["WO_EID", "WO_PNo"],
     "fks": [{"name": "fk_worker", "attrs": ["WO_EID"], "references": "Employee"}]})";

constexpr std::string_view kCompanyWorkload =
    "SELECT * FROM Employee AS e, Address AS a WHERE a.AID = e.EHome_AID AND e.EID = ?\n"
    "SELECT * FROM Department AS d, Employee AS e, Works_On AS wo "
    "WHERE d.DNo = e.E_DNo AND e.EID = wo.WO_EID AND d.DNo = ?\n"
    "SELECT * FROM Employee AS e, Works_On AS wo WHERE e.EID = wo.WO_EID AND wo.Hours = ?\n";

constexpr std::string_view kTpcwSchema = R"({
  "relations": [
    {"name": "Customer", "attrs": [["C_ID", "int"], ["C_UNAME", "string"], ["C_BALANCE", "int"]], "pk": ["C_ID"]},
    {"name": "Order", "attrs": [["O_ID", "int"], ["O_C_ID", "int"], ["O_TOTAL", "int"]], "pk": ["O_ID"],
     "fks": [{"name": "fk_order_customer", "attrs": ["O_C_ID"], "references": "Customer"}]},
    {"name": "Order_line", "attrs": [["OL_ID", "int"], ["OL_O_ID", "int"], ["OL_I_ID", "int"], ["OL_QTY", "int"]],
     "pk": ["OL_ID"],
     "fks": [{"name": "fk_line_order", "attrs": ["OL_O_ID"], "references": "Order"}]}
  ],
  "indexes": [
    {"name": "IX_Order_O_C_ID", "base": "Order", "on": ["O_C_ID"]},
    {"name": "IX_Order_line_OL_O_ID", "base": "Order_line", "on": ["OL_O_ID"]}
  ],
  "roots": ["Customer"]
}
)";

constexpr std::string_view kTpcwWorkload =
    "SELECT * FROM Customer AS c, Order AS o WHERE c.C_ID = o.O_C_ID AND c.C_ID = ?\n"
    "SELECT * FROM Customer AS c, Order AS o, Order_line AS ol "
    "WHERE c.C_ID = o.O_C_ID AND o.O_ID = ol.OL_O_ID AND c.C_ID = ?\n";

class Loader {
public:
    Loader(txn::TxnManager& txn, PopulateCounts& counts) : txn_(txn), counts_(counts) {}

    void insert(const sql::Statement& stmt, std::vector<Value> values) {
        txn_.execute(stmt, values);
        ++counts_[stmt.target()];
    }

private:
    txn::TxnManager& txn_;
    PopulateCounts& counts_;
};

std::int64_t uniform(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

PopulateCounts populate_company(txn::TxnManager& txn, const PopulateOptions& o, bool with_project) {
    static const char* const kCities[] = {"Boston", "Denver", "Austin", "Fresno", "Tucson", "Omaha"};
    auto address = sql::parse_statement("INSERT INTO Address (AID, Street, City) VALUES (?, ?, ?)");
    auto dept = sql::parse_statement("INSERT INTO Department (DNo, DName) VALUES (?, ?)");
    auto employee = sql::parse_statement(
        "INSERT INTO Employee (EID, EName, Salary, EHome_AID, EOffice_AID, E_DNo) VALUES (?, ?, ?, ?, ?, ?)");
    auto works = sql::parse_statement("INSERT INTO Works_On (WO_EID, WO_PNo, Hours) VALUES (?, ?, ?)");
    auto project = sql::parse_statement("INSERT INTO Project (PNo, PName) VALUES (?, ?)");

    PopulateCounts counts;
    Loader load(txn, counts);
    std::mt19937_64 rng(o.seed);
    const auto addresses = static_cast<std::int64_t>(o.scale);
    const auto ratio = static_cast<std::int64_t>(o.ratio);
    const std::int64_t depts = std::max<std::int64_t>(1, addresses / std::max<std::int64_t>(1, ratio));

    for (std::int64_t a = 1; a <= addresses; ++a) {
        load.insert(address, {a, "street-" + std::to_string(a), std::string(kCities[uniform(rng, 0, 5)])});
    }
    for (std::int64_t d = 1; d <= depts; ++d) load.insert(dept, {d, "dept-" + std::to_string(d)});
    std::int64_t eid = 0;
    for (std::int64_t a = 1; a <= addresses; ++a) {
        for (std::int64_t i = 0; i < ratio; ++i) {
            std::int64_t salary = uniform(rng, 1000, 9999);
            load.insert(employee, {++eid, "emp-" + std::to_string(salary), salary, a, uniform(rng, 1, addresses),
                                   uniform(rng, 1, depts)});
        }
    }
    for (std::int64_t e = 1; e <= eid; ++e) {
        for (std::int64_t p = 1; p <= ratio; ++p) load.insert(works, {e, p, uniform(rng, 1, 40)});
    }
    if (with_project) {
        for (std::int64_t p = 1; p <= addresses; ++p) load.insert(project, {p, "project-" + std::to_string(p)});
    }
    return counts;
}

PopulateCounts populate_tpcw(txn::TxnManager& txn, const PopulateOptions& o) {
    auto customer = sql::parse_statement("INSERT INTO Customer (C_ID, C_UNAME, C_BALANCE) VALUES (?, ?, ?)");
    auto order = sql::parse_statement("INSERT INTO Order (O_ID, O_C_ID, O_TOTAL) VALUES (?, ?, ?)");
    auto line = sql::parse_statement("INSERT INTO Order_line (OL_ID, OL_O_ID, OL_I_ID, OL_QTY) VALUES (?, ?, ?, ?)");

    PopulateCounts counts;
    Loader load(txn, counts);
    std::mt19937_64 rng(o.seed);
    const auto customers = static_cast<std::int64_t>(o.scale);
    const auto ratio = static_cast<std::int64_t>(o.ratio);
    for (std::int64_t c = 1; c <= customers; ++c) {
        load.insert(customer, {c, "user-" + std::to_string(c), uniform(rng, 0, 100000)});
    }
    std::int64_t oid = 0;
    for (std::int64_t c = 1; c <= customers; ++c) {
        for (std::int64_t i = 0; i < ratio; ++i) load.insert(order, {++oid, c, uniform(rng, 1, 5000)});
    }
    std::int64_t olid = 0;
    for (std::int64_t oi = 1; oi <= oid; ++oi) {
        for (std::int64_t i = 0; i < ratio; ++i) {
            load.insert(line, {++olid, oi, uniform(rng, 1, 10 * customers), uniform(rng, 1, 10)});
        }
    }
    return counts;
}

}  // namespace

Fixture company() {
    return {"company",
            std::string("{\n  \"relations\": [") + std::string(kCompanyRelations) +
                "\n  ],\n  \"roots\": [\"Address\", \"Department\"]\n}\n",
            std::string(kCompanyWorkload)};
}

Fixture company_project() {
    return {"company-project",
            std::string("{\n  \"relations\": [") + std::string(kCompanyRelations) +
                ",\n    {\"name\": \"Project\", \"attrs\": [[\"PNo\", \"int\"], [\"PName\", \"string\"]], "
                "\"pk\": [\"PNo\"]}\n  ],\n  \"roots\": [\"Address\", \"Department\"]\n}\n",
            std::string(kCompanyWorkload)};
}

Fixture tpcw_micro() { return {"tpcw-micro", std::string(kTpcwSchema), std::string(kTpcwWorkload)}; }

std::vector<std::string> builtin_names() { return {"company", "company-project", "tpcw-micro"}; }

std::optional<Fixture> builtin(std::string_view name) {
    if (name == "company") return company();
    if (name == "company-project") return company_project();
    if (name == "tpcw-micro") return tpcw_micro();
    return std::nullopt;
}

PopulateCounts populate(std::string_view fixture, txn::TxnManager& txn, const PopulateOptions& options) {
    if (fixture == "company") return populate_company(txn, options, false);
    if (fixture == "company-project") return populate_company(txn, options, true);
    if (fixture == "tpcw-micro") return populate_tpcw(txn, options);
    throw InvalidStatement("no populate routine for fixture '" + std::string(fixture) + "'");
}

}  // namespace synergy::fixtures
