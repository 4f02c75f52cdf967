#include "synergy/txn.hpp"

#include <thread>

#include "synergy/errors.hpp"

namespace synergy::txn {

namespace {

using maintenance::Tuple;
using sql::StatementKind;

constexpr std::int64_t kFree = 0;
constexpr std::int64_t kHeld = 1;

void validate(const Design& d, const sql::Statement& s) {
    if (!s.is_write()) throw InvalidStatement("not a write statement");
    if (s.tables.size() != 1 || !s.joins.empty()) throw InvalidStatement("a write names exactly one relation");
    const RelationDef* rel = d.schema.find(s.target());
    if (!rel) throw InvalidStatement("unknown relation " + s.target());
    if (s.placeholder_count() != 0) throw InvalidStatement("statement has unbound placeholders");
    if (!write_specifies_key(*rel, s)) {
        throw InvalidStatement("write to " + rel->name + " must specify every key attribute");
    }
    for (const auto& f : s.filters) {
        const Attribute* a = rel->find_attribute(f.column.name);
        if (!a) throw InvalidStatement(rel->name + " has no attribute " + f.column.name);
        if (!has_type(std::get<Value>(f.operand), a->type)) {
            throw InvalidStatement("filter on " + rel->name + "." + a->name + " compares with the wrong type");
        }
    }
    switch (s.kind) {
        case StatementKind::Insert: maintenance::insert_tuple(*rel, s); break;
        case StatementKind::Update: maintenance::update_assignments(*rel, s); [[fallthrough]];
        case StatementKind::Delete: maintenance::key_tuple(*rel, s); break;
        default: break;
    }
}

bool filters_hold(const sql::Statement& s, const Tuple& row) {
    for (const auto& f : s.filters) {
        auto it = row.find(f.column.name);
        if (it == row.end() || !sql::compare(it->second, f.op, std::get<Value>(f.operand))) return false;
    }
    return true;
}

storage::RowKey root_key(const RelationDef& root, std::span<const Value> values, bool& ok) {
    std::vector<AttrType> types;
    for (std::size_t i = 0; i < root.primary_key.size(); ++i) {
        AttrType t = root.find_attribute(root.primary_key[i])->type;
        if (!has_type(values[i], t)) {
            ok = false;
            return {};
        }
        types.push_back(t);
    }
    ok = true;
    return storage::encode_key(values, types);
}

}  // namespace

void create_tables(const Design& design, storage::Store& store) {
    for (const auto& spec : design.catalog.tables()) {
        if (!store.has_table(spec.name)) store.create_table(storage::TableHandle::from_spec(spec));
    }
}

Resolution resolve_root(const Design& design, std::string_view relation, const Tuple& row, bool is_insert,
                        maintenance::Reader& reader) {
    Resolution res;
    const viewgen::RootedTree* tree = design.tree_of(relation);
    if (!tree) return res;
    const RelationDef& root = design.schema.relation(tree->root());
    auto finish = [&](std::vector<Value> values) {
        bool ok = false;
        storage::RowKey key = root_key(root, values, ok);
        if (ok) {
            res.root = RootRef{root.name, std::move(key)};
        } else if (is_insert) {
            res.orphan = true;
        } else {
            throw OrphanError("root key of " + std::string(relation) + " row has the wrong type");
        }
        return res;
    };

    auto take = [&](const Tuple& t, const std::vector<std::string>& attrs) -> std::optional<std::vector<Value>> {
        std::vector<Value> values;
        for (const auto& a : attrs) {
            auto it = t.find(a);
            if (it == t.end() || is_null(it->second)) return std::nullopt;
            values.push_back(it->second);
        }
        return values;
    };

    if (relation == root.name) return finish(take(row, root.primary_key).value());

    viewgen::Path path = tree->path_to(relation);
    Tuple child = row;
    for (std::size_t i = path.edges.size(); i-- > 0;) {
        const SchemaEdge& e = path.edges[i];
        if (e.parent == root.name) {
            if (auto values = take(child, e.child_fk)) return finish(std::move(*values));
        } else if (auto parent = maintenance::read_parent(e, child, reader)) {
            child = std::move(*parent);
            continue;
        }
        if (!is_insert) {
            throw OrphanError(std::string(relation) + " row has no " + e.parent + " ancestor to lock through");
        }
        res.orphan = true;
        return res;
    }
    return res;
}

LockManager::LockManager(storage::Store& store, std::chrono::milliseconds timeout)
    : store_(store), timeout_(timeout) {}

bool LockManager::try_acquire(const RootRef& ref) {
    storage::Table& t = store_.table(lock_table_name(ref.root));
    if (t.check_and_put(ref.key, kLockColumn, Value{kFree}, Value{kHeld}) ||
        t.check_and_put(ref.key, kLockColumn, std::nullopt, Value{kHeld})) {
        acquisitions_.fetch_add(1);
        return true;
    }
    return false;
}

void LockManager::acquire(const RootRef& ref) {
    auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (int attempt = 0;; ++attempt) {
        if (try_acquire(ref)) return;
        if (std::chrono::steady_clock::now() >= deadline) {
            throw LockTimeout("timed out waiting for lock on " + ref.root);
        }
        if (attempt < 8) {
            std::this_thread::yield();
        } else {
            int shift = std::min(attempt - 8, 10);
            std::this_thread::sleep_for(std::chrono::microseconds(1 << shift));
        }
    }
}

void LockManager::release(const RootRef& ref) {
    storage::Table& t = store_.table(lock_table_name(ref.root));
    if (store_.get(ref.root, ref.key)) {
        Value free{kFree};
        storage::Cell cell{kLockColumn, free};
        t.put(ref.key, std::span<const storage::Cell>(&cell, 1));
    } else {
        t.erase(ref.key);
    }
}

bool LockManager::held(const RootRef& ref) const {
    auto row = store_.get(lock_table_name(ref.root), ref.key);
    return row && row->get(kLockColumn) == Value{kHeld};
}

TxnManager::TxnManager(const Design& design, storage::Store& store, Wal& wal, TxnOptions options)
    : design_(design), store_(store), wal_(wal), locks_(store, options.lock_timeout) {
    create_tables(design_, store_);
}

TxnResult TxnManager::execute(std::string_view sql_text, std::span<const Value> params) {
    return execute(sql::parse_statement(sql_text), params);
}

TxnResult TxnManager::execute(const sql::Statement& stmt, std::span<const Value> params) {
    sql::Statement bound = stmt.placeholder_count() == 0 ? stmt : sql::bind(stmt, params);
    validate(design_, bound);
    std::uint64_t id = wal_.begin(sql::render_statement(bound));
    return run(bound, id, false);
}

TxnResult TxnManager::replay(const sql::Statement& bound) {
    validate(design_, bound);
    return run(bound, 0, true);
}

TxnResult TxnManager::run(const sql::Statement& s, std::uint64_t txn_id, bool replaying) {
    const RelationDef& rel = design_.schema.relation(s.target());
    const TableSpec& base_spec = design_.catalog.at(rel.name);
    maintenance::StoreReader reader(store_);
    TxnResult res;
    res.txn_id = txn_id;
    std::optional<RootRef> lock;
    bool mutating = false;

    auto put = [&](const std::string& table, const storage::RowKey& key, const std::vector<storage::Cell>& cells,
                   std::optional<bool> dirty = std::nullopt) { store_.table(table).put(key, cells, dirty); };
    auto finish = [&] {
        step(5);
        if (!replaying) wal_.end(txn_id, WalPhase::Commit);
        if (lock) locks_.release(*lock);
        step(6);
        return res;
    };
    auto apply_index = [&](const maintenance::IndexChange& c, bool dirty) {
        if (c.old_key && c.moves()) store_.table(c.index).erase(*c.old_key);
        if (c.new_key) put(c.index, *c.new_key, c.cells, c.moves() ? std::optional<bool>(dirty) : std::nullopt);
        ++res.index_rows;
    };

    try {
        Tuple row;  // inserted tuple, or stored row for delete/update
        Tuple key;
        if (s.kind == StatementKind::Insert) {
            row = maintenance::insert_tuple(rel, s);
        } else {
            key = maintenance::key_tuple(rel, s);
            auto stored = reader.get(rel.name, maintenance::key_of(base_spec, key));
            if (!stored) {
                res.no_op = true;
                if (!replaying) wal_.end(txn_id, WalPhase::Commit);
                return res;
            }
            row = maintenance::row_tuple(*stored);
        }
        Resolution r = resolve_root(design_, rel.name, row, s.kind == StatementKind::Insert, reader);
        res.orphan = r.orphan;
        if (r.root) {
            res.root = r.root->root;
            if (!replaying) {
                locks_.acquire(*r.root);
                lock = r.root;
                res.locks_acquired = 1;
            }
        }
        step(1);

        const storage::RowKey base_key = maintenance::key_of(base_spec, s.kind == StatementKind::Insert ? row : key);
        auto current = reader.get(rel.name, base_key);

        if (s.kind == StatementKind::Insert) {
            if (current && !replaying) throw InvalidStatement("duplicate key in " + rel.name);
            Tuple before = current ? maintenance::row_tuple(*current) : Tuple{};
            struct ViewInsert {
                const viewselect::ViewDef* view;
                storage::RowKey key;
                Tuple tuple;
                std::vector<maintenance::IndexChange> indexes;
            };
            std::vector<ViewInsert> inserts;
            for (const auto& v : design_.views()) {
                if (!maintenance::insert_applies(v, rel.name)) continue;
                auto t = maintenance::build_insert_view_tuple(v, row, reader);
                if (!t) continue;
                storage::RowKey vk = maintenance::key_of(design_.catalog.at(v.name), *t);
                Tuple old;
                if (auto existing = reader.get(v.name, vk)) old = maintenance::row_tuple(*existing);
                auto changes = maintenance::index_changes(design_, v.name, old, *t);
                inserts.push_back({&v, std::move(vk), std::move(*t), std::move(changes)});
            }
            auto base_changes = maintenance::index_changes(design_, rel.name, before, row);
            step(2);
            step(3);
            mutating = true;
            for (std::size_t i = 0; i < inserts.size(); ++i) {
                for (const auto& c : inserts[i].indexes) apply_index(c, false);
                put(inserts[i].view->name, inserts[i].key, maintenance::tuple_cells(inserts[i].tuple), false);
                ++res.view_rows;
                if (i == 0) step(kMidApply);
            }
            for (const auto& c : base_changes) apply_index(c, false);
            put(rel.name, base_key, maintenance::tuple_cells(row));
            ++res.base_rows;
            step(4);
            return finish();
        }

        if (!current) {
            res.no_op = true;
            step(2);
            step(3);
            step(4);
            return finish();
        }
        Tuple before = maintenance::row_tuple(*current);

        if (s.kind == StatementKind::Delete) {
            struct ViewDelete {
                const viewselect::ViewDef* view;
                storage::RowKey key;
                std::vector<maintenance::IndexKey> indexes;
            };
            std::vector<ViewDelete> deletes;
            for (const auto& v : design_.views()) {
                if (!maintenance::delete_applies(v, rel.name)) continue;
                storage::RowKey vk = maintenance::key_of(design_.catalog.at(v.name), key);
                auto ix = maintenance::build_delete_index_keys(design_, v, vk, reader);
                deletes.push_back({&v, std::move(vk), std::move(ix)});
            }
            auto base_changes = maintenance::index_changes(design_, rel.name, before, {});
            step(2);
            step(3);
            mutating = true;
            for (std::size_t i = 0; i < deletes.size(); ++i) {
                for (const auto& ik : deletes[i].indexes) {
                    if (store_.table(ik.index).erase(ik.key)) ++res.index_rows;
                }
                if (store_.table(deletes[i].view->name).erase(deletes[i].key)) ++res.view_rows;
                if (i == 0) step(kMidApply);
            }
            for (const auto& c : base_changes) apply_index(c, false);
            store_.table(rel.name).erase(base_key);
            ++res.base_rows;
            step(4);
            return finish();
        }

        // update
        Tuple assignments = maintenance::update_assignments(rel, s);
        if (!filters_hold(s, before)) {
            if (!replaying) {
                res.no_op = true;
                step(2);
                step(3);
                step(4);
                return finish();
            }
            // the logged update already reached its base row; only clear marks
            assignments.clear();
        }
        Tuple after = before;
        for (const auto& [a, v] : assignments) after[a] = v;
        std::vector<maintenance::UpdatePlan> plans;
        for (const auto& v : design_.views()) {
            if (maintenance::update_applies(v, rel.name)) {
                plans.push_back(maintenance::plan_update_rows(design_, v, rel.name, key, assignments, reader));
            }
        }
        auto base_changes = maintenance::index_changes(design_, rel.name, before, after);
        step(2);

        mutating = true;
        for (const auto& p : plans) {
            for (const auto& r : p.rows) {
                store_.table(p.view).mark(r.key, true);
                for (const auto& c : r.indexes) {
                    if (c.old_key) store_.table(c.index).mark(*c.old_key, true);
                }
            }
        }
        for (const auto& c : base_changes) {
            if (c.old_key) store_.table(c.index).mark(*c.old_key, true);
        }
        step(3);

        bool first = true;
        for (const auto& p : plans) {
            for (const auto& r : p.rows) {
                for (const auto& c : r.indexes) apply_index(c, true);
                if (!r.changed.empty()) put(p.view, r.key, r.changed);
                ++res.view_rows;
                if (first) step(kMidApply);
                first = false;
            }
        }
        for (const auto& c : base_changes) apply_index(c, true);
        if (!assignments.empty()) put(rel.name, base_key, maintenance::tuple_cells(assignments));
        ++res.base_rows;
        step(4);

        // every index row of a touched row, so marks left by a crash clear too
        auto unmark_indexes = [&](const std::string& source, const Tuple& t) {
            for (const auto* ix : design_.indexes_on(source)) {
                const TableSpec& spec = design_.catalog.at(ix->name);
                bool complete = std::all_of(spec.key.begin(), spec.key.end(), [&](const std::string& k) {
                    auto it = t.find(k);
                    return it != t.end() && !is_null(it->second);
                });
                if (complete) store_.table(ix->name).mark(maintenance::key_of(spec, t), false);
            }
        };
        for (const auto& p : plans) {
            for (const auto& r : p.rows) {
                unmark_indexes(p.view, r.after);
                store_.table(p.view).mark(r.key, false);
            }
        }
        unmark_indexes(rel.name, after);
        if (assignments.empty() && !replaying) res.no_op = true;
        return finish();
    } catch (const InjectedCrash&) {
        throw;
    } catch (...) {
        if (!mutating) {
            if (lock) locks_.release(*lock);
            if (!replaying) wal_.end(txn_id, WalPhase::Abort);
        }
        throw;
    }
}

std::size_t TxnManager::recover() {
    auto pending = wal_.pending();
    for (const auto& r : pending) {
        sql::Statement s;
        try {
            s = sql::parse_statement(r.statement);
        } catch (const SyntaxError& e) {
            throw WalCorruption("wal txn " + std::to_string(r.txn_id) + " holds an unparsable statement: " +
                                e.what());
        }
        replay(s);
        wal_.end(r.txn_id, WalPhase::Commit);
    }
    for (const auto& root : design_.schema.roots) {
        storage::Table& t = store_.table(lock_table_name(root));
        for (const auto& row : t.scan_all()) {
            if (!store_.get(root, row.key())) {
                t.erase(row.key());
            } else if (row.get(kLockColumn) != Value{kFree}) {
                Value free{kFree};
                storage::Cell cell{kLockColumn, free};
                t.put(row.key(), std::span<const storage::Cell>(&cell, 1));
            }
        }
    }
    return pending.size();
}

}  // namespace synergy::txn
