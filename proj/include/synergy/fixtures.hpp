#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synergy/schema.hpp"
#include "synergy/sql.hpp"
#include "synergy/txn.hpp"

namespace synergy::fixtures {

struct Fixture {
    std::string name;
    std::string schema_json;
    std::string workload_text;

    SchemaDef schema() const { return parse_schema_json(schema_json); }
    std::vector<sql::Statement> workload() const { return sql::parse_workload(workload_text); }
};

// Company database with roots {Address, Department} and workload W1-W3.
Fixture company();
// company() plus a Project relation outside every tree, so writes to it
// take no lock.
Fixture company_project();
// Customer / Order / Order_line with roots {Customer} and queries Q1, Q2.
Fixture tpcw_micro();

std::optional<Fixture> builtin(std::string_view name);
std::vector<std::string> builtin_names();

struct PopulateOptions {
    std::size_t scale = 500;  // customers, or addresses
    std::size_t ratio = 10;   // children per parent
    std::uint64_t seed = 42;
};

// Rows inserted per relation.
using PopulateCounts = std::map<std::string, std::size_t>;

// Inserts seeded rows parent-first through the transaction manager, so
// views and indexes fill as a side effect. `fixture` names a builtin.
PopulateCounts populate(std::string_view fixture, txn::TxnManager& txn, const PopulateOptions& options);

}  // namespace synergy::fixtures
