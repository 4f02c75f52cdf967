#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "synergy/value.hpp"

namespace synergy::sql {

struct ColumnRef {
    std::string qualifier;  // alias; empty when unqualified
    std::string name;

    bool operator==(const ColumnRef&) const = default;
    std::string str() const { return qualifier.empty() ? name : qualifier + "." + name; }
};

enum class CompareOp { Eq, Lt, Gt, Le, Ge };

std::string_view op_symbol(CompareOp op);
// `lhs op rhs`; false when either side is absent or the types differ.
bool compare(const Value& lhs, CompareOp op, const Value& rhs);

struct Placeholder {
    std::size_t index = 0;  // positional, 0-based
    bool operator==(const Placeholder&) const = default;
};

using Operand = std::variant<Value, Placeholder>;

struct TableRef {
    std::string relation;
    std::string alias;
    bool operator==(const TableRef&) const = default;
};

// Equality between columns of two distinct aliases.
struct JoinCondition {
    ColumnRef left;
    ColumnRef right;
    bool operator==(const JoinCondition&) const = default;
};

struct Filter {
    ColumnRef column;
    CompareOp op = CompareOp::Eq;
    Operand operand;
    bool operator==(const Filter&) const = default;
};

struct Assignment {
    std::string column;
    Operand value;
    bool operator==(const Assignment&) const = default;
};

enum class StatementKind { SelectJoin, Insert, Update, Delete };

struct Statement {
    StatementKind kind = StatementKind::SelectJoin;
    std::vector<TableRef> tables;
    std::vector<ColumnRef> projections;  // empty means '*'
    std::vector<JoinCondition> joins;
    std::vector<Filter> filters;
    std::vector<Assignment> assignments;  // Update only
    std::vector<Assignment> values;       // Insert only: column = value

    bool operator==(const Statement&) const = default;

    bool is_write() const { return kind != StatementKind::SelectJoin; }
    bool is_star() const { return projections.empty(); }
    // Relation targeted by a write statement.
    const std::string& target() const { return tables.front().relation; }
    // Relation bound to `alias`, or nullptr.
    const TableRef* find_alias(std::string_view alias) const;
    // Alias a column reference resolves to; unqualified refs resolve to the
    // single table of a single-table statement.
    const TableRef* resolve(const ColumnRef& ref) const;
    std::size_t placeholder_count() const;
};

Statement parse_statement(std::string_view text);
std::string render_statement(const Statement& stmt);

// Replaces every placeholder with params[index]. Throws InvalidStatement when
// params are missing.
Statement bind(const Statement& stmt, std::span<const Value> params);

// One statement per line; '#' starts a comment; blank lines are skipped.
std::vector<Statement> parse_workload(std::string_view text);
std::vector<Statement> load_workload_file(const std::filesystem::path& path);

}  // namespace synergy::sql
