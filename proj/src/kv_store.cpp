#include "scenedex/kv_store.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "scenedex/error.hpp"

namespace fs = std::filesystem;

namespace scenedex {

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        fail(ErrorKind::Consistency, "sha256 digest failed");
    }
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    static std::atomic<unsigned> counter{0};
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + fmt::format(".tmp{}.{}",
        std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000, counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Consistency, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) fail(ErrorKind::Consistency, "short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::NotFound, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

KvStore::KvStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(*dir_);
    *this = load_from(*dir_);
}

KvStore::KvStore(const KvStore& other) {
    std::lock_guard lock(other.mu_);
    entries_ = other.entries_;
    dir_ = other.dir_;
}

KvStore& KvStore::operator=(const KvStore& other) {
    if (this == &other) return *this;
    std::map<std::string, std::string> entries;
    std::optional<fs::path> dir;
    {
        std::lock_guard lock(other.mu_);
        entries = other.entries_;
        dir = other.dir_;
    }
    std::lock_guard lock(mu_);
    entries_ = std::move(entries);
    dir_ = std::move(dir);
    return *this;
}

std::optional<std::string> KvStore::get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void KvStore::put(const std::string& key, std::string value) {
    if (key.find('\n') != std::string::npos) fail(ErrorKind::InvalidInput, "kv key contains a newline");
    std::lock_guard lock(mu_);
    if (dir_) write_entry(key, value);
    entries_[key] = std::move(value);
}

bool KvStore::contains(const std::string& key) const {
    std::lock_guard lock(mu_);
    return entries_.count(key) != 0;
}

std::size_t KvStore::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

std::vector<std::string> KvStore::keys(std::string_view prefix) const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (auto it = entries_.lower_bound(std::string(prefix)); it != entries_.end(); ++it) {
        if (it->first.compare(0, prefix.size(), prefix) != 0) break;
        out.push_back(it->first);
    }
    return out;
}

void KvStore::write_entry(const std::string& key, const std::string& value) const {
    std::string blob;
    blob.reserve(key.size() + 1 + value.size());
    blob += key;
    blob += '\n';
    blob += value;
    write_file_atomic(*dir_ / sha256_hex(key), blob);
}

void KvStore::persist_to(const fs::path& dir) {
    std::lock_guard lock(mu_);
    fs::create_directories(dir);
    dir_ = dir;
    for (const auto& [k, v] : entries_) write_entry(k, v);
}

KvStore KvStore::load_from(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::NotFound, "kv directory not found: " + dir.string());
    KvStore store;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (name.size() != 64 || name.find('.') != std::string::npos) continue;
        std::string blob = read_file(entry.path());
        const auto nl = blob.find('\n');
        if (nl == std::string::npos) fail(ErrorKind::Consistency, "corrupt kv entry " + name);
        store.entries_.emplace(blob.substr(0, nl), blob.substr(nl + 1));
    }
    store.dir_ = dir;
    return store;
}

bool operator==(const KvStore& a, const KvStore& b) {
    if (&a == &b) return true;
    std::scoped_lock lock(a.mu_, b.mu_);
    return a.entries_ == b.entries_;
}

}  // namespace scenedex
