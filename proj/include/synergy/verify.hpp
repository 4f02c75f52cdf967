#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "synergy/design.hpp"
#include "synergy/storage.hpp"

namespace synergy {

struct TableDiff {
    std::string table;
    TableKind kind = TableKind::View;
    std::size_t expected = 0;    // rows the recomputation produced
    std::size_t actual = 0;      // rows stored
    std::size_t missing = 0;     // expected, not stored
    std::size_t extra = 0;       // stored, not expected
    std::size_t mismatched = 0;  // same key, different cells
    std::size_t dirty = 0;       // stored rows still marked

    std::size_t diffs() const { return missing + extra + mismatched; }
};

struct VerifyReport {
    std::vector<TableDiff> tables;

    std::size_t total_diffs() const;
    std::size_t total_dirty() const;
    bool ok() const { return total_diffs() == 0 && total_dirty() == 0; }
    std::string render() const;
};

// Recomputes every view by hash-joining its base tables along the view path,
// and every index from its source, then diffs against the stored rows. Also
// counts marked rows in base tables. Run on a quiescent store.
VerifyReport verify_store(const Design& design, const storage::Store& store);

}  // namespace synergy
