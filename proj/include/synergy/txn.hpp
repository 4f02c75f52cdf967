#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "synergy/design.hpp"
#include "synergy/maintenance.hpp"
#include "synergy/sql.hpp"
#include "synergy/storage.hpp"
#include "synergy/wal.hpp"

namespace synergy::txn {

// Creates every catalog table that does not exist yet.
void create_tables(const Design& design, storage::Store& store);

struct RootRef {
    std::string root;
    storage::RowKey key;
};

struct Resolution {
    std::optional<RootRef> root;  // nullopt: relation outside every tree, or orphan insert
    bool orphan = false;          // an ancestor needed for the walk is absent
};

// Walks FK links from the written row up to its tree's root. `row` is the
// inserted tuple, or the stored row for delete/update. Throws OrphanError
// for delete/update when an ancestor is absent.
Resolution resolve_root(const Design& design, std::string_view relation, const maintenance::Tuple& row,
                        bool is_insert, maintenance::Reader& reader);

class LockManager {
public:
    explicit LockManager(storage::Store& store, std::chrono::milliseconds timeout = std::chrono::seconds(10));

    // Spins on check_and_put(false -> true), creating the lock row when it
    // is absent, with bounded exponential backoff. Throws LockTimeout.
    void acquire(const RootRef& ref);
    bool try_acquire(const RootRef& ref);
    // Frees the lock; the lock row is erased instead when its root row no
    // longer exists.
    void release(const RootRef& ref);
    bool held(const RootRef& ref) const;

    std::uint64_t acquisitions() const { return acquisitions_.load(); }
    std::chrono::milliseconds timeout() const { return timeout_; }

private:
    storage::Store& store_;
    std::chrono::milliseconds timeout_;
    std::atomic<std::uint64_t> acquisitions_{0};
};

// Thrown by a fault hook to simulate a crash: the transaction stops where it
// is, its lock stays held and no end record is logged.
class InjectedCrash : public std::runtime_error {
public:
    explicit InjectedCrash(int step) : std::runtime_error("injected crash after step " + std::to_string(step)), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

// Called after each step of a write: 1 lock, 2 read, 3 mark, 4 apply,
// 5 unmark, 6 release; kMidApply fires after the first view row is written.
using FaultHook = std::function<void(int step)>;
inline constexpr int kMidApply = 40;

struct TxnResult {
    std::uint64_t txn_id = 0;
    int locks_acquired = 0;
    std::optional<std::string> root;
    bool no_op = false;   // target row absent, filter false, or nothing to do
    bool orphan = false;  // insert whose ancestors are missing
    std::size_t base_rows = 0;
    std::size_t view_rows = 0;
    std::size_t index_rows = 0;
};

struct TxnOptions {
    std::chrono::milliseconds lock_timeout{10000};
};

class TxnManager {
public:
    TxnManager(const Design& design, storage::Store& store, Wal& wal, TxnOptions options = {});

    TxnResult execute(const sql::Statement& stmt, std::span<const Value> params = {});
    TxnResult execute(std::string_view sql_text, std::span<const Value> params = {});

    // Re-executes a logged statement without taking its lock (the crashed
    // owner still holds it); safe to repeat.
    TxnResult replay(const sql::Statement& bound);

    // Replays every Begin without an end record, logs a commit for each,
    // then frees or drops every lock row. Returns the number replayed.
    std::size_t recover();

    void set_fault_hook(FaultHook hook) { hook_ = std::move(hook); }
    LockManager& locks() { return locks_; }
    const Design& design() const { return design_; }

private:
    TxnResult run(const sql::Statement& bound, std::uint64_t txn_id, bool replaying);
    void step(int n) const {
        if (hook_) hook_(n);
    }

    const Design& design_;
    storage::Store& store_;
    Wal& wal_;
    LockManager locks_;
    FaultHook hook_;
};

}  // namespace synergy::txn
