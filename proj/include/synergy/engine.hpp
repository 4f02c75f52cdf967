#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synergy/schema.hpp"
#include "synergy/sql.hpp"
#include "synergy/storage.hpp"

namespace synergy::engine {

enum class Access { PointGet, KeyPrefix, IndexPrefix, FullScan };
std::string_view access_name(Access a);

// Value of one lookup key component: a filter operand, or a column of a row
// fetched by an earlier step.
struct KeySource {
    std::optional<sql::Operand> operand;
    int step = -1;
    std::string column;
};

struct JoinCheck {
    std::string column;  // of this step
    int other_step = 0;
    std::string other_column;
};

struct PlanStep {
    std::string alias;
    const TableSpec* table = nullptr;
    Access access = Access::FullScan;
    const TableSpec* index = nullptr;  // IndexPrefix only
    bool covered = false;              // index rows carry every needed column
    std::vector<KeySource> key;        // bound prefix of the table or index key
    std::vector<sql::Filter> filters;  // all filters on this alias, rechecked per row
    std::vector<JoinCheck> joins;      // equalities with earlier steps
};

struct OutputColumn {
    int step = 0;
    std::string column;
};

// Left-deep nested-loop plan.
struct QueryPlan {
    std::vector<PlanStep> steps;
    std::vector<OutputColumn> output;
    std::size_t placeholders = 0;

    std::string describe() const;
};

// Seeds with the most selective table (point get > key prefix > index
// prefix > any filter > none), then adds joined tables, looking each up by
// key prefix or index prefix when the join binds one. Throws PlanError.
QueryPlan plan_query(const sql::Statement& q, const StoreCatalog& catalog);

struct ResultSet {
    std::vector<std::string> columns;  // unqualified
    std::vector<std::vector<Value>> rows;
};

struct ExecStats {
    std::size_t restarts = 0;
    std::size_t rows_fetched = 0;
};

class Engine {
public:
    explicit Engine(const storage::Store& store, std::size_t max_retries = 100)
        : store_(store), max_retries_(max_retries) {}

    // Restarts the whole statement whenever a row that satisfies its step's
    // predicates is marked dirty; throws DirtyReadTimeout after max_retries
    // restarts.
    ResultSet execute(const QueryPlan& plan, std::span<const Value> params = {}, ExecStats* stats = nullptr) const;
    ResultSet query(const sql::Statement& q, const StoreCatalog& catalog, std::span<const Value> params = {},
                    ExecStats* stats = nullptr) const;

private:
    const storage::Store& store_;
    std::size_t max_retries_;
};

}  // namespace synergy::engine
