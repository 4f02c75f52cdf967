#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace synergy {

enum class WalPhase : std::uint8_t { Begin = 0, Commit = 1, Abort = 2 };

struct WalRecord {
    std::uint64_t txn_id = 0;
    WalPhase phase = WalPhase::Begin;
    std::string statement;  // Begin only
    bool operator==(const WalRecord&) const = default;
};

// Frame: u32 LE payload length, then payload {u64 LE txn_id, u8 phase,
// statement bytes}.
std::string encode_wal_record(const WalRecord& r);
// A truncated final frame (torn append) is dropped; anything else malformed
// throws WalCorruption.
std::vector<WalRecord> decode_wal(std::string_view bytes);

class Wal {
public:
    enum class Mode { File, Memory, Disabled };

    static Wal memory();
    static Wal disabled();
    static Wal open(const std::filesystem::path& path, bool fsync_on_append = true);

    Wal(Wal&& other) noexcept;
    Wal& operator=(Wal&&) = delete;
    ~Wal();

    Mode mode() const { return mode_; }
    // Assigns the next txn id and logs its Begin record atomically, so ids
    // appear in the log in increasing order.
    std::uint64_t begin(std::string_view statement);
    void end(std::uint64_t txn_id, WalPhase phase);
    void append(const WalRecord& r);
    // Ids handed out by begin() stay above `floor`.
    void raise_high_water(std::uint64_t floor);
    std::vector<WalRecord> records() const;
    // Largest txn id ever logged (0 when empty).
    std::uint64_t high_water() const;
    // Begin records with neither commit nor abort, in txn id order.
    std::vector<WalRecord> pending() const;
    // Drops every record; used after a checkpoint.
    void truncate();

private:
    Wal(Mode mode, std::filesystem::path path, bool fsync);
    void write_locked(const WalRecord& r);

    Mode mode_;
    std::filesystem::path path_;
    bool fsync_ = false;
    std::FILE* file_ = nullptr;
    mutable std::mutex mutex_;
    std::string memory_;
    std::uint64_t high_water_ = 0;
};

}  // namespace synergy
