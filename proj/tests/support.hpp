#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "synergy/database.hpp"
#include "synergy/engine.hpp"
#include "synergy/maintenance.hpp"

namespace synergy::testing {

std::filesystem::path temp_dir(const std::string& tag);
std::string read_text(const std::filesystem::path& path);
std::filesystem::path golden_path(const std::string& name);

// A result row as the set of its distinct non-null (column, value) pairs.
using NormRow = std::vector<std::pair<std::string, Value>>;
using Bag = std::multiset<NormRow>;

Bag normalize(const engine::ResultSet& rs);

using BaseTables = std::map<std::string, std::vector<maintenance::Tuple>>;

// Every row of every relation of the schema.
BaseTables snapshot_base(const SchemaDef& schema, const storage::Store& store);

// Nested-loop evaluation of a SELECT over base relations, independent of the
// planner and of views.
Bag evaluate(const SchemaDef& schema, const sql::Statement& q, const BaseTables& tables,
             std::span<const Value> params = {});

// Random tree-ish schema of up to 5 relations with FK chains, a random
// workload of FK equi-join queries and a database filled through the
// transaction manager.
struct RandomCase {
    std::string schema_json;
    std::string workload_text;
    std::unique_ptr<Database> db;
    std::vector<sql::Statement> queries;  // to evaluate, literals only
};

RandomCase random_case(std::uint64_t seed, std::size_t max_rows = 200, std::size_t query_count = 8);

std::string describe(const Bag& bag, std::size_t limit = 5);

}  // namespace synergy::testing
