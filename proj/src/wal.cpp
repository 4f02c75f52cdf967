#include "synergy/wal.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include "synergy/errors.hpp"

namespace synergy {

namespace {

void put_le(std::string& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::string_view in, std::size_t pos, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::string encode_wal_record(const WalRecord& r) {
    std::string payload;
    put_le(payload, r.txn_id, 8);
    payload.push_back(static_cast<char>(r.phase));
    payload += r.statement;
    std::string out;
    put_le(out, payload.size(), 4);
    return out + payload;
}

std::vector<WalRecord> decode_wal(std::string_view bytes) {
    std::vector<WalRecord> out;
    std::size_t pos = 0;
    std::uint64_t last_begin = 0;
    while (pos < bytes.size()) {
        if (pos + 4 > bytes.size()) break;  // torn length prefix
        std::uint64_t len = get_le(bytes, pos, 4);
        if (pos + 4 + len > bytes.size()) break;  // torn payload
        if (len < 9) throw WalCorruption("wal record at offset " + std::to_string(pos) + " is too short");
        WalRecord r;
        r.txn_id = get_le(bytes, pos + 4, 8);
        auto phase = static_cast<unsigned char>(bytes[pos + 12]);
        if (phase > 2) {
            throw WalCorruption("wal record at offset " + std::to_string(pos) + " has unknown phase " +
                                std::to_string(phase));
        }
        r.phase = static_cast<WalPhase>(phase);
        r.statement = std::string(bytes.substr(pos + 13, len - 9));
        if (r.phase == WalPhase::Begin) {
            if (r.txn_id <= last_begin) {
                throw WalCorruption("wal txn id " + std::to_string(r.txn_id) + " is not increasing");
            }
            last_begin = r.txn_id;
        } else if (!r.statement.empty()) {
            throw WalCorruption("wal end record for txn " + std::to_string(r.txn_id) + " carries a statement");
        }
        out.push_back(std::move(r));
        pos += 4 + len;
    }
    return out;
}

Wal::Wal(Mode mode, std::filesystem::path path, bool fsync) : mode_(mode), path_(std::move(path)), fsync_(fsync) {}

Wal::Wal(Wal&& other) noexcept
    : mode_(other.mode_),
      path_(std::move(other.path_)),
      fsync_(other.fsync_),
      file_(std::exchange(other.file_, nullptr)),
      memory_(std::move(other.memory_)),
      high_water_(other.high_water_) {}

Wal::~Wal() {
    if (file_) std::fclose(file_);
}

Wal Wal::memory() { return Wal(Mode::Memory, {}, false); }

Wal Wal::disabled() { return Wal(Mode::Disabled, {}, false); }

Wal Wal::open(const std::filesystem::path& path, bool fsync_on_append) {
    Wal w(Mode::File, path, fsync_on_append);
    auto existing = decode_wal(read_file(path));
    for (const auto& r : existing) w.high_water_ = std::max(w.high_water_, r.txn_id);
    // rewrite without a torn tail so appends start on a frame boundary
    std::string clean;
    for (const auto& r : existing) clean += encode_wal_record(r);
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open wal " + path.string());
        out.write(clean.data(), static_cast<std::streamsize>(clean.size()));
    }
    w.file_ = std::fopen(path.c_str(), "ab");
    if (!w.file_) throw Error("cannot open wal " + path.string());
    return w;
}

std::uint64_t Wal::begin(std::string_view statement) {
    std::lock_guard lock(mutex_);
    WalRecord r{high_water_ + 1, WalPhase::Begin, std::string(statement)};
    write_locked(r);
    return r.txn_id;
}

void Wal::end(std::uint64_t txn_id, WalPhase phase) {
    std::lock_guard lock(mutex_);
    write_locked({txn_id, phase, {}});
}

void Wal::append(const WalRecord& r) {
    std::lock_guard lock(mutex_);
    write_locked(r);
}

void Wal::raise_high_water(std::uint64_t floor) {
    std::lock_guard lock(mutex_);
    high_water_ = std::max(high_water_, floor);
}

void Wal::write_locked(const WalRecord& r) {
    high_water_ = std::max(high_water_, r.txn_id);
    if (mode_ == Mode::Disabled) return;
    std::string frame = encode_wal_record(r);
    if (mode_ == Mode::Memory) {
        memory_ += frame;
        return;
    }
    if (std::fwrite(frame.data(), 1, frame.size(), file_) != frame.size() || std::fflush(file_) != 0) {
        throw Error("wal append failed: " + path_.string());
    }
    if (fsync_) ::fsync(::fileno(file_));
}

std::vector<WalRecord> Wal::records() const {
    std::lock_guard lock(mutex_);
    if (mode_ == Mode::Memory) return decode_wal(memory_);
    if (mode_ == Mode::File) return decode_wal(read_file(path_));
    return {};
}

std::uint64_t Wal::high_water() const {
    std::lock_guard lock(mutex_);
    return high_water_;
}

std::vector<WalRecord> Wal::pending() const {
    std::map<std::uint64_t, WalRecord> open;
    for (auto& r : records()) {
        if (r.phase == WalPhase::Begin) {
            open.emplace(r.txn_id, std::move(r));
        } else {
            open.erase(r.txn_id);
        }
    }
    std::vector<WalRecord> out;
    for (auto& [_, r] : open) out.push_back(std::move(r));
    return out;
}

void Wal::truncate() {
    std::lock_guard lock(mutex_);
    if (mode_ == Mode::Memory) {
        memory_.clear();
    } else if (mode_ == Mode::File) {
        std::fclose(file_);
        file_ = std::fopen(path_.c_str(), "wb");
        if (!file_) throw Error("cannot truncate wal " + path_.string());
        if (fsync_) ::fsync(::fileno(file_));
    }
}

}  // namespace synergy
