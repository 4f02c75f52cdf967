#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <sstream>
#include <unistd.h>

#include "synergy/errors.hpp"

namespace synergy::testing {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    fs::path dir = fs::temp_directory_path() /
                   ("synergy-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path golden_path(const std::string& name) { return fs::path(SYNERGY_TEST_DATA) / "golden" / name; }

namespace {

NormRow norm(std::vector<std::pair<std::string, Value>> pairs) {
    std::erase_if(pairs, [](const auto& p) { return is_null(p.second); });
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
}

}  // namespace

Bag normalize(const engine::ResultSet& rs) {
    Bag bag;
    for (const auto& row : rs.rows) {
        std::vector<std::pair<std::string, Value>> pairs;
        for (std::size_t i = 0; i < row.size(); ++i) pairs.emplace_back(rs.columns[i], row[i]);
        bag.insert(norm(std::move(pairs)));
    }
    return bag;
}

BaseTables snapshot_base(const SchemaDef& schema, const storage::Store& store) {
    BaseTables out;
    for (const auto& r : schema.relations) {
        auto& rows = out[r.name];
        for (auto scan = store.scan(r.name); auto row = scan.next();) rows.push_back(maintenance::row_tuple(*row));
    }
    return out;
}

Bag evaluate(const SchemaDef& schema, const sql::Statement& q, const BaseTables& tables,
             std::span<const Value> params) {
    const std::size_t n = q.tables.size();
    auto position = [&](const sql::ColumnRef& ref) -> std::size_t {
        if (ref.qualifier.empty()) return 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (q.tables[i].alias == ref.qualifier) return i;
        }
        throw std::logic_error("unknown alias " + ref.qualifier);
    };
    auto operand = [&](const sql::Operand& op) -> Value {
        if (auto* p = std::get_if<sql::Placeholder>(&op)) return params[p->index];
        return std::get<Value>(op);
    };
    std::vector<const maintenance::Tuple*> cur(n);
    auto value = [&](std::size_t i, const std::string& col) -> Value {
        auto it = cur[i]->find(col);
        return it == cur[i]->end() ? Value{} : it->second;
    };

    Bag bag;
    std::function<void(std::size_t)> step = [&](std::size_t i) {
        if (i == n) {
            std::vector<std::pair<std::string, Value>> pairs;
            if (q.is_star()) {
                for (std::size_t t = 0; t < n; ++t) {
                    for (const auto& a : schema.relation(q.tables[t].relation).attributes) {
                        pairs.emplace_back(a.name, value(t, a.name));
                    }
                }
            } else {
                for (const auto& p : q.projections) pairs.emplace_back(p.name, value(position(p), p.name));
            }
            bag.insert(norm(std::move(pairs)));
            return;
        }
        auto it = tables.find(q.tables[i].relation);
        if (it == tables.end()) return;
        for (const auto& t : it->second) {
            cur[i] = &t;
            bool ok = true;
            for (const auto& j : q.joins) {
                std::size_t a = position(j.left);
                std::size_t b = position(j.right);
                if (std::max(a, b) != i) continue;
                if (!sql::compare(value(a, j.left.name), sql::CompareOp::Eq, value(b, j.right.name))) ok = false;
            }
            for (const auto& f : q.filters) {
                std::size_t a = position(f.column);
                if (a != i) continue;
                if (!sql::compare(value(a, f.column.name), f.op, operand(f.operand))) ok = false;
            }
            if (ok) step(i + 1);
        }
    };
    step(0);
    return bag;
}

std::string describe(const Bag& bag, std::size_t limit) {
    std::ostringstream out;
    out << bag.size() << " rows";
    std::size_t shown = 0;
    for (const auto& row : bag) {
        if (shown++ == limit) {
            out << "\n  ...";
            break;
        }
        out << "\n  {";
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? ", " : "") << row[i].first << "=" << sql_literal(row[i].second);
        out << "}";
    }
    return out.str();
}

namespace {

struct RelGen {
    std::string name;
    std::vector<std::string> pk;
    std::vector<std::pair<std::string, bool>> attrs;  // name, is string
    struct Fk {
        std::vector<std::string> attrs;
        int parent;
    };
    std::vector<Fk> fks;
};

std::string join_names(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
    return out;
}

std::string quoted_list(const std::vector<std::string>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", \"" : "\"") + v[i] + "\"";
    return out + "]";
}

}  // namespace

RandomCase random_case(std::uint64_t seed, std::size_t max_rows, std::size_t query_count) {
    std::mt19937_64 rng(seed);
    auto roll = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto chance = [&](int percent) { return roll(1, 100) <= percent; };

    const int n = roll(2, 5);
    const bool second_root = n > 2 && chance(30);
    std::vector<RelGen> rels(n);
    for (int i = 0; i < n; ++i) {
        RelGen& r = rels[i];
        r.name = "R" + std::to_string(i);
        r.pk.push_back(r.name + "_ID");
        r.attrs.push_back({r.name + "_ID", false});
        if (chance(25)) {
            r.pk.push_back(r.name + "_K");
            r.attrs.push_back({r.name + "_K", false});
        }
        bool is_root = i == 0 || (i == 1 && second_root);
        if (!is_root) {
            int parent = roll(0, i - 1);
            std::vector<int> parents = {parent};
            if (i > 1 && chance(25)) {
                int other = roll(0, i - 1);
                if (other != parent) parents.push_back(other);
            }
            for (std::size_t f = 0; f < parents.size(); ++f) {
                RelGen::Fk fk;
                fk.parent = parents[f];
                for (const auto& k : rels[parents[f]].pk) {
                    std::string a = (f == 0 ? "F" : "G") + std::to_string(i) + "_" + k;
                    fk.attrs.push_back(a);
                    r.attrs.push_back({a, false});
                }
                r.fks.push_back(fk);
            }
        }
        r.attrs.push_back({"A" + std::to_string(i), false});
        r.attrs.push_back({"S" + std::to_string(i), true});
        if (chance(25)) r.attrs.push_back({"TAG", false});
    }

    std::ostringstream schema;
    schema << "{\"relations\": [";
    for (int i = 0; i < n; ++i) {
        const RelGen& r = rels[i];
        schema << (i ? ",\n" : "\n") << "{\"name\": \"" << r.name << "\", \"attrs\": [";
        for (std::size_t a = 0; a < r.attrs.size(); ++a) {
            schema << (a ? ", " : "") << "[\"" << r.attrs[a].first << "\", \"" << (r.attrs[a].second ? "string" : "int")
                   << "\"]";
        }
        schema << "], \"pk\": " << quoted_list(r.pk) << ", \"fks\": [";
        for (std::size_t f = 0; f < r.fks.size(); ++f) {
            schema << (f ? ", " : "") << "{\"name\": \"fk" << i << "_" << f << "\", \"attrs\": "
                   << quoted_list(r.fks[f].attrs) << ", \"references\": \"" << rels[r.fks[f].parent].name << "\"}";
        }
        schema << "]}";
    }
    schema << "],\n\"roots\": " << quoted_list(second_root ? std::vector<std::string>{"R0", "R1"}
                                                           : std::vector<std::string>{"R0"})
           << "}\n";

    // FK adjacency for query walks: (other relation, fk index on child, child)
    struct Link {
        int other;
        int child;
        int fk;
    };
    std::vector<std::vector<Link>> adj(n);
    for (int c = 0; c < n; ++c) {
        for (std::size_t f = 0; f < rels[c].fks.size(); ++f) {
            int p = rels[c].fks[f].parent;
            adj[c].push_back({p, c, static_cast<int>(f)});
            adj[p].push_back({c, c, static_cast<int>(f)});
        }
    }
    auto literal_for = [&](const std::pair<std::string, bool>& attr) -> std::string {
        if (attr.second) return std::string("'") + "xyz"[roll(0, 2)] + "'";
        if (attr.first == "TAG") return std::to_string(roll(0, 2));
        if (attr.first[0] == 'A') return std::to_string(roll(0, 4));
        return std::to_string(roll(1, 12));
    };
    auto random_query = [&]() {
        std::vector<int> used = {roll(0, n - 1)};
        std::vector<std::string> joins;
        int length = roll(1, std::min(4, n));
        while (static_cast<int>(used.size()) < length) {
            std::vector<std::pair<int, Link>> options;
            for (int u : used) {
                for (const auto& l : adj[u]) {
                    if (std::find(used.begin(), used.end(), l.other) == used.end()) options.push_back({u, l});
                }
            }
            if (options.empty()) break;
            auto [from, link] = options[roll(0, static_cast<int>(options.size()) - 1)];
            used.push_back(link.other);
            int parent = rels[link.child].fks[link.fk].parent;
            auto alias = [&](int rel) {
                return "t" + std::to_string(std::find(used.begin(), used.end(), rel) - used.begin());
            };
            const auto& fk = rels[link.child].fks[link.fk];
            for (std::size_t k = 0; k < fk.attrs.size(); ++k) {
                joins.push_back(alias(parent) + "." + rels[parent].pk[k] + " = " + alias(link.child) + "." + fk.attrs[k]);
            }
            (void)from;
        }
        std::vector<std::string> conds = joins;
        int filters = roll(0, 2);
        for (int f = 0; f < filters; ++f) {
            int t = roll(0, static_cast<int>(used.size()) - 1);
            const auto& attrs = rels[used[t]].attrs;
            const auto& attr = attrs[roll(0, static_cast<int>(attrs.size()) - 1)];
            static const char* const kOps[] = {"=", "=", "=", "<", ">", "<=", ">="};
            conds.push_back("t" + std::to_string(t) + "." + attr.first + " " + kOps[roll(0, 6)] + " " + literal_for(attr));
        }
        std::string projection = "*";
        if (chance(50)) {
            std::vector<std::string> cols;
            int k = roll(1, 4);
            for (int c = 0; c < k; ++c) {
                int t = roll(0, static_cast<int>(used.size()) - 1);
                const auto& attrs = rels[used[t]].attrs;
                cols.push_back("t" + std::to_string(t) + "." + attrs[roll(0, static_cast<int>(attrs.size()) - 1)].first);
            }
            projection = join_names(cols);
        }
        std::string text = "SELECT " + projection + " FROM ";
        for (std::size_t t = 0; t < used.size(); ++t) {
            text += (t ? ", " : "") + rels[used[t]].name + " AS t" + std::to_string(t);
        }
        for (std::size_t c = 0; c < conds.size(); ++c) text += (c ? " AND " : " WHERE ") + conds[c];
        return text;
    };

    RandomCase rc;
    rc.schema_json = schema.str();
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < query_count; ++i) texts.push_back(random_query());
    std::size_t in_workload = std::max<std::size_t>(1, query_count * 3 / 4);
    for (std::size_t i = 0; i < in_workload; ++i) rc.workload_text += texts[i] + "\n";

    DatabaseOptions options;
    options.durable = false;
    rc.db = Database::in_memory(parse_schema_json(rc.schema_json), sql::parse_workload(rc.workload_text), options);
    for (const auto& t : texts) rc.queries.push_back(sql::parse_statement(t));

    // parent-first population
    std::vector<std::vector<std::vector<Value>>> keys(n);
    std::size_t budget = max_rows;
    for (int i = 0; i < n && budget > 0; ++i) {
        const RelGen& r = rels[i];
        std::size_t share = std::max<std::size_t>(1, max_rows / static_cast<std::size_t>(n));
        std::size_t count = std::min<std::size_t>(budget, static_cast<std::size_t>(roll(1, static_cast<int>(share))));
        budget -= count;
        for (std::size_t row = 1; row <= count; ++row) {
            std::vector<std::string> cols;
            std::vector<Value> vals;
            std::vector<Value> key = {static_cast<std::int64_t>(row)};
            if (r.pk.size() == 2) key.push_back(std::int64_t{roll(1, 2)});
            for (std::size_t k = 0; k < r.pk.size(); ++k) {
                cols.push_back(r.pk[k]);
                vals.push_back(key[k]);
            }
            for (const auto& fk : r.fks) {
                if (chance(8)) continue;  // unset reference
                std::vector<Value> parent_key;
                if (chance(5) || keys[fk.parent].empty()) {
                    parent_key.assign(fk.attrs.size(), Value{std::int64_t{999}});
                } else {
                    const auto& pks = keys[fk.parent];
                    parent_key = pks[roll(0, static_cast<int>(pks.size()) - 1)];
                }
                for (std::size_t k = 0; k < fk.attrs.size(); ++k) {
                    cols.push_back(fk.attrs[k]);
                    vals.push_back(parent_key[k]);
                }
            }
            for (const auto& a : r.attrs) {
                if (std::find(cols.begin(), cols.end(), a.first) != cols.end()) continue;
                if (a.first.rfind("F", 0) == 0 || a.first.rfind("G", 0) == 0) continue;
                if (chance(5)) continue;
                cols.push_back(a.first);
                if (a.second) {
                    vals.push_back(std::string(1, "xyz"[roll(0, 2)]));
                } else {
                    vals.push_back(std::int64_t{a.first == "TAG" ? roll(0, 2) : roll(0, 4)});
                }
            }
            std::string text = "INSERT INTO " + r.name + " (" + join_names(cols) + ") VALUES (";
            for (std::size_t v = 0; v < vals.size(); ++v) text += (v ? ", " : "") + sql_literal(vals[v]);
            rc.db->write(sql::parse_statement(text + ")"));
            keys[i].push_back(key);
        }
    }

    // non-key updates anywhere, deletes only from relations nobody references
    std::vector<bool> referenced(n, false);
    for (const auto& r : rels) {
        for (const auto& fk : r.fks) referenced[fk.parent] = true;
    }
    for (int m = 0; m < 20; ++m) {
        int i = roll(0, n - 1);
        if (keys[i].empty()) continue;
        const RelGen& r = rels[i];
        const auto& key = keys[i][roll(0, static_cast<int>(keys[i].size()) - 1)];
        std::string where;
        for (std::size_t k = 0; k < r.pk.size(); ++k) where += (k ? " AND " : " WHERE ") + r.pk[k] + " = " + sql_literal(key[k]);
        std::string text;
        if (!referenced[i] && chance(30)) {
            text = "DELETE FROM " + r.name + where;
        } else {
            const auto& a = r.attrs[r.attrs.size() - 1 - static_cast<std::size_t>(roll(0, 1))];
            if (a.first.rfind("F", 0) == 0 || a.first.rfind("G", 0) == 0 || a.first.rfind("R", 0) == 0) continue;
            text = "UPDATE " + r.name + " SET " + a.first + " = " + literal_for(a) + where;
        }
        try {
            rc.db->write(sql::parse_statement(text));
        } catch (const OrphanError&) {
            // the row's ancestor chain is broken; it is in no view
        }
    }
    return rc;
}

}  // namespace synergy::testing
