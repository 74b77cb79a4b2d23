#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scenedex {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Writes `contents` to `path` through a temporary sibling and a rename, so
/// readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// String-to-bytes store, optionally durable.
///
/// When bound to a directory every `put` is written through immediately as
/// `<dir>/<sha256(key)>`; the file holds the key on its first line followed by
/// the raw value. Thread-safe.
class KvStore {
public:
    KvStore() = default;
    explicit KvStore(std::filesystem::path dir);

    KvStore(const KvStore& other);
    KvStore& operator=(const KvStore& other);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, std::string value);
    bool contains(const std::string& key) const;
    std::size_t size() const;

    /// All keys starting with `prefix`, sorted.
    std::vector<std::string> keys(std::string_view prefix = {}) const;

    /// Writes every entry to `dir` (creating it) and binds the store there.
    void persist_to(const std::filesystem::path& dir);

    static KvStore load_from(const std::filesystem::path& dir);

    const std::optional<std::filesystem::path>& directory() const { return dir_; }

    friend bool operator==(const KvStore& a, const KvStore& b);

private:
    void write_entry(const std::string& key, const std::string& value) const;

    mutable std::mutex mu_;
    std::map<std::string, std::string> entries_;
    std::optional<std::filesystem::path> dir_;
};

}  // namespace scenedex
