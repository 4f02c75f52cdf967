#include "synergy/engine.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <thread>

#include "synergy/errors.hpp"

namespace synergy::engine {

namespace {

struct Restart {};

struct JoinEdge {
    int a;
    std::string a_col;
    int b;
    std::string b_col;
};

struct Candidate {
    int score = -1;
    Access access = Access::FullScan;
    const TableSpec* index = nullptr;
    bool covered = false;
    std::vector<KeySource> key;
};

std::size_t bound_prefix(const std::vector<std::string>& key, const std::map<std::string, KeySource>& bound) {
    std::size_t n = 0;
    while (n < key.size() && bound.count(key[n])) ++n;
    return n;
}

}  // namespace

std::string_view access_name(Access a) {
    switch (a) {
        case Access::PointGet: return "point-get";
        case Access::KeyPrefix: return "key-prefix";
        case Access::IndexPrefix: return "index-prefix";
        case Access::FullScan: return "full-scan";
    }
    return "?";
}

std::string QueryPlan::describe() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        if (i) out << " -> ";
        out << s.alias << ":" << access_name(s.access) << "(";
        if (s.index) out << s.index->name << (s.covered ? "" : "->");
        if (!s.index || !s.covered) out << s.table->name;
        out << ")";
    }
    return out.str();
}

QueryPlan plan_query(const sql::Statement& q, const StoreCatalog& catalog) {
    if (q.kind != sql::StatementKind::SelectJoin) throw PlanError("only SELECT statements are planned");
    const int n = static_cast<int>(q.tables.size());
    std::vector<const TableSpec*> specs;
    for (const auto& t : q.tables) {
        const TableSpec* spec = catalog.find(t.relation);
        if (!spec) throw PlanError("unknown relation " + t.relation);
        specs.push_back(spec);
    }
    auto index_of = [&](const sql::ColumnRef& ref) {
        const sql::TableRef* t = q.resolve(ref);
        if (!t) throw PlanError("cannot resolve " + ref.str());
        int i = static_cast<int>(t - q.tables.data());
        if (!specs[i]->find_column(ref.name)) {
            throw PlanError(specs[i]->name + " has no column " + ref.name);
        }
        return i;
    };

    std::vector<std::set<std::string>> needed(n);
    std::vector<std::vector<sql::Filter>> filters(n);
    std::vector<JoinEdge> joins;
    for (const auto& f : q.filters) {
        int i = index_of(f.column);
        filters[i].push_back(f);
        needed[i].insert(f.column.name);
    }
    for (const auto& j : q.joins) {
        int a = index_of(j.left);
        int b = index_of(j.right);
        joins.push_back({a, j.left.name, b, j.right.name});
        needed[a].insert(j.left.name);
        needed[b].insert(j.right.name);
    }
    std::vector<std::pair<int, std::string>> output;
    if (q.is_star()) {
        for (int i = 0; i < n; ++i) {
            for (const auto& c : specs[i]->columns) {
                output.emplace_back(i, c.name);
                needed[i].insert(c.name);
            }
        }
    } else {
        for (const auto& p : q.projections) {
            int i = index_of(p);
            output.emplace_back(i, p.name);
            needed[i].insert(p.name);
        }
    }

    std::vector<int> step_of(n, -1);
    auto evaluate = [&](int i) {
        std::map<std::string, KeySource> bound;
        for (const auto& f : filters[i]) {
            if (f.op == sql::CompareOp::Eq && !bound.count(f.column.name)) {
                bound[f.column.name] = KeySource{f.operand, -1, {}};
            }
        }
        for (const auto& j : joins) {
            if (j.a == i && step_of[j.b] >= 0 && !bound.count(j.a_col)) {
                bound[j.a_col] = KeySource{std::nullopt, step_of[j.b], j.b_col};
            } else if (j.b == i && step_of[j.a] >= 0 && !bound.count(j.b_col)) {
                bound[j.b_col] = KeySource{std::nullopt, step_of[j.a], j.a_col};
            }
        }
        auto sources = [&](const std::vector<std::string>& key, std::size_t len) {
            std::vector<KeySource> out;
            for (std::size_t k = 0; k < len; ++k) out.push_back(bound.at(key[k]));
            return out;
        };
        Candidate c;
        const auto& key = specs[i]->key;
        std::size_t p = bound_prefix(key, bound);
        if (p == key.size()) {
            c.score = 4;
            c.access = Access::PointGet;
            c.key = sources(key, p);
            return c;
        }
        if (p > 0) {
            c.score = 3;
            c.access = Access::KeyPrefix;
            c.key = sources(key, p);
            return c;
        }
        std::size_t best_p = 0;
        for (const TableSpec* ix : catalog.indexes_on(specs[i]->name)) {
            std::size_t ip = bound_prefix(ix->key, bound);
            if (ip == 0) continue;
            bool covered = std::all_of(needed[i].begin(), needed[i].end(),
                                       [&](const std::string& col) { return ix->find_column(col) != nullptr; });
            bool better = ip > best_p || (ip == best_p && covered && !c.covered);
            if (better) {
                best_p = ip;
                c.index = ix;
                c.covered = covered;
                c.key = sources(ix->key, ip);
            }
        }
        if (c.index) {
            c.score = 2;
            c.access = Access::IndexPrefix;
            return c;
        }
        c.score = filters[i].empty() ? 0 : 1;
        c.access = Access::FullScan;
        return c;
    };
    auto connected = [&](int i) {
        return std::any_of(joins.begin(), joins.end(), [&](const JoinEdge& j) {
            return (j.a == i && step_of[j.b] >= 0) || (j.b == i && step_of[j.a] >= 0);
        });
    };

    QueryPlan plan;
    plan.placeholders = q.placeholder_count();
    for (int placed = 0; placed < n; ++placed) {
        int pick = -1;
        Candidate best;
        bool pick_connected = false;
        for (int i = 0; i < n; ++i) {
            if (step_of[i] >= 0) continue;
            bool conn = placed > 0 && connected(i);
            Candidate c = evaluate(i);
            bool better = pick < 0 || (conn && !pick_connected) || (conn == pick_connected && c.score > best.score);
            if (better) {
                pick = i;
                best = std::move(c);
                pick_connected = conn;
            }
        }
        PlanStep step;
        step.alias = q.tables[pick].alias;
        step.table = specs[pick];
        step.access = best.access;
        step.index = best.index;
        step.covered = best.covered;
        step.key = std::move(best.key);
        step.filters = filters[pick];
        for (const auto& j : joins) {
            if (j.a == pick && step_of[j.b] >= 0) step.joins.push_back({j.a_col, step_of[j.b], j.b_col});
            if (j.b == pick && step_of[j.a] >= 0) step.joins.push_back({j.b_col, step_of[j.a], j.a_col});
        }
        step_of[pick] = placed;
        plan.steps.push_back(std::move(step));
    }
    for (const auto& [i, col] : output) plan.output.push_back({step_of[i], col});
    return plan;
}

namespace {

// Column position cached for the layout of the last row read through it.
struct Slot {
    std::string_view column;
    std::shared_ptr<const storage::ColumnSet> layout;
    std::optional<std::size_t> index;

    const Value& read(const storage::Row& row) {
        if (row.layout() != layout) {
            layout = row.layout();
            index = layout ? layout->index_of(column) : std::nullopt;
        }
        return row.at(index);
    }
};

class Executor {
public:
    Executor(const storage::Store& store, const QueryPlan& plan, std::span<const Value> params, ExecStats& stats)
        : store_(store), plan_(plan), params_(params), stats_(stats), owned_(plan.steps.size()),
          rows_(plan.steps.size()), keys_(plan.steps.size()), first_(plan.steps.size()) {
        std::size_t total = plan.output.size();
        for (const auto& s : plan.steps) total += s.filters.size() + 2 * s.joins.size() + s.key.size() + s.table->key.size();
        slots_.reserve(total);
        for (std::size_t i = 0; i < plan.steps.size(); ++i) {
            const PlanStep& s = plan.steps[i];
            First& f = first_[i];
            f.filter = slots_.size();
            for (const auto& c : s.filters) slots_.push_back({c.column.name, {}, {}});
            f.join = slots_.size();
            for (const auto& j : s.joins) slots_.push_back({j.column, {}, {}});
            f.other = slots_.size();
            for (const auto& j : s.joins) slots_.push_back({j.other_column, {}, {}});
            f.key = slots_.size();
            for (const auto& k : s.key) slots_.push_back({k.column, {}, {}});
            f.source = slots_.size();
            for (const auto& k : s.table->key) slots_.push_back({k, {}, {}});
        }
        first_out_ = slots_.size();
        for (const auto& c : plan.output) slots_.push_back({c.column, {}, {}});
        for (const auto& s : plan.steps) {
            tables_.push_back(&store.table(s.table->name));
            indexes_.push_back(s.access == Access::IndexPrefix ? &store.table(s.index->name) : nullptr);
        }
    }

    void run(ResultSet& out) {
        out_ = &out;
        descend(0);
    }

private:
    const Value& operand(const sql::Operand& op) const {
        if (auto* p = std::get_if<sql::Placeholder>(&op)) {
            if (p->index >= params_.size()) throw InvalidStatement("missing parameter " + std::to_string(p->index + 1));
            return params_[p->index];
        }
        return std::get<Value>(op);
    }

    // Fills keys_[depth] with the values for a lookup; false when one
    // cannot match any key.
    bool key_values(std::size_t depth, const TableSpec& keyed) {
        const PlanStep& s = plan_.steps[depth];
        auto& values = keys_[depth];
        values.clear();
        for (std::size_t k = 0; k < s.key.size(); ++k) {
            const KeySource& src = s.key[k];
            const Value& v = src.operand ? operand(*src.operand) : slots_[first_[depth].key + k].read(*rows_[src.step]);
            const Attribute* col = keyed.find_column(keyed.key[k]);
            if (is_null(v) || (col && !has_type(v, col->type))) return false;
            values.push_back(v);
        }
        return true;
    }

    bool accept(std::size_t depth, const storage::Row& row) {
        const PlanStep& s = plan_.steps[depth];
        for (std::size_t i = 0; i < s.filters.size(); ++i) {
            const auto& f = s.filters[i];
            if (!sql::compare(slots_[first_[depth].filter + i].read(row), f.op, operand(f.operand))) return false;
        }
        for (std::size_t i = 0; i < s.joins.size(); ++i) {
            const Value& mine = slots_[first_[depth].join + i].read(row);
            const Value& other = slots_[first_[depth].other + i].read(*rows_[s.joins[i].other_step]);
            if (!sql::compare(mine, sql::CompareOp::Eq, other)) return false;
        }
        return true;
    }

    // Checks the row bound at depth and continues the join from it.
    void visit(std::size_t depth, const storage::Row& row) {
        ++stats_.rows_fetched;
        rows_[depth] = &row;
        if (!accept(depth, row)) return;
        if (row.dirty()) throw Restart{};
        descend(depth + 1);
    }

    void visit_all(std::size_t depth, storage::Scanner& scan) {
        while (const storage::Row* row = scan.advance()) visit(depth, *row);
    }

    void descend(std::size_t depth) {
        if (depth == plan_.steps.size()) {
            std::vector<Value> out;
            out.reserve(plan_.output.size());
            for (std::size_t i = 0; i < plan_.output.size(); ++i) {
                const Value& v = slots_[first_out_ + i].read(*rows_[plan_.output[i].step]);
                if (const auto* n = std::get_if<std::int64_t>(&v)) {
                    out.emplace_back(std::in_place_index<1>, *n);
                } else {
                    out.push_back(v);
                }
            }
            out_->rows.push_back(std::move(out));
            return;
        }
        const PlanStep& s = plan_.steps[depth];
        const storage::Table& table = *tables_[depth];
        switch (s.access) {
            case Access::PointGet: {
                if (!key_values(depth, *s.table)) return;
                const auto& values = keys_[depth];
                if (table.get_into(storage::encode_key(values), owned_[depth])) visit(depth, owned_[depth]);
                return;
            }
            case Access::KeyPrefix: {
                if (!key_values(depth, *s.table)) return;
                const auto& values = keys_[depth];
                auto scan = table.scan(storage::KeyRange::prefix(storage::encode_key_prefix(values)));
                visit_all(depth, scan);
                return;
            }
            case Access::IndexPrefix: {
                if (!key_values(depth, *s.index)) return;
                const auto& values = keys_[depth];
                const storage::Table& index = *indexes_[depth];
                storage::KeyRange range = values.size() == s.index->key.size()
                                              ? storage::KeyRange{storage::encode_key(values),
                                                                  storage::encode_key(values) + '\0'}
                                              : storage::KeyRange::prefix(storage::encode_key_prefix(values));
                auto scan = index.scan(std::move(range));
                if (s.covered) {
                    visit_all(depth, scan);
                    return;
                }
                while (const storage::Row* entry = scan.advance()) {
                    if (entry->dirty()) throw Restart{};
                    auto& source_key = keys_[depth];
                    source_key.clear();
                    for (std::size_t k = 0; k < s.table->key.size(); ++k) {
                        source_key.push_back(slots_[first_[depth].source + k].read(*entry));
                    }
                    if (table.get_into(storage::encode_key(source_key), owned_[depth])) visit(depth, owned_[depth]);
                }
                return;
            }
            case Access::FullScan: {
                auto scan = table.scan();
                visit_all(depth, scan);
                return;
            }
        }
    }

    const storage::Store& store_;
    const QueryPlan& plan_;
    std::span<const Value> params_;
    ExecStats& stats_;
    std::vector<const storage::Table*> tables_;   // per step
    std::vector<const storage::Table*> indexes_;  // per step, index-prefix steps only
    std::vector<storage::Row> owned_;  // rows loaded by point reads
    std::vector<const storage::Row*> rows_;  // row bound at each depth
    std::vector<std::vector<Value>> keys_;  // lookup key scratch per depth
    // Every slot of the plan in one array; first_ holds where each step's
    // filter, join, other-side, key and source (table key read from index
    // rows) slots start.
    struct First {
        std::size_t filter, join, other, key, source;
    };
    std::vector<Slot> slots_;
    std::vector<First> first_;
    std::size_t first_out_ = 0;
    ResultSet* out_ = nullptr;
};

}  // namespace

ResultSet Engine::execute(const QueryPlan& plan, std::span<const Value> params, ExecStats* stats) const {
    ExecStats local;
    ExecStats& st = stats ? *stats : local;
    if (params.size() < plan.placeholders) {
        throw InvalidStatement("query needs " + std::to_string(plan.placeholders) + " parameters, got " +
                               std::to_string(params.size()));
    }
    for (std::size_t attempt = 0;; ++attempt) {
        ResultSet rs;
        rs.columns.reserve(plan.output.size());
        for (const auto& c : plan.output) rs.columns.push_back(c.column);
        try {
            Executor(store_, plan, params, st).run(rs);
            return rs;
        } catch (const Restart&) {
            ++st.restarts;
            if (attempt + 1 > max_retries_) {
                throw DirtyReadTimeout("query kept reading marked rows after " + std::to_string(max_retries_) +
                                       " restarts");
            }
            std::this_thread::yield();
        }
    }
}

ResultSet Engine::query(const sql::Statement& q, const StoreCatalog& catalog, std::span<const Value> params,
                        ExecStats* stats) const {
    return execute(plan_query(q, catalog), params, stats);
}

}  // namespace synergy::engine
