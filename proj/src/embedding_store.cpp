#include "cof/embedding_store.hpp"

#include <cstring>
#include <fstream>

namespace cof {

namespace {

constexpr char kMagic[4] = {'C', 'O', 'F', 'E'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) {
        throw FormatError("embedding store: truncated file: " + path);
    }
    return v;
}

}  // namespace

void EmbeddingStore::append(const std::string& id, const std::vector<float>& vector) {
    if (dim_ == 0 && !vector.empty()) {
        dim_ = static_cast<std::uint32_t>(vector.size());
    }
    if (vector.size() != dim_) {
        throw UsageError("embedding store: vector for '" + id + "' has dim " +
                         std::to_string(vector.size()) + ", store has dim " +
                         std::to_string(dim_));
    }
    if (id.size() > 0xFFFF) {
        throw UsageError("embedding store: id longer than 65535 bytes");
    }
    if (!index_.emplace(id, ids_.size()).second) {
        throw UsageError("embedding store: duplicate id '" + id + "'");
    }
    ids_.push_back(id);
    vectors_.push_back(vector);
}

void EmbeddingStore::append(const std::string& id, const Embedding& vector) {
    std::vector<float> v(static_cast<std::size_t>(vector.size()));
    for (Index i = 0; i < vector.size(); ++i) {
        v[static_cast<std::size_t>(i)] = static_cast<float>(vector(i));
    }
    append(id, v);
}

const std::vector<float>& EmbeddingStore::vector(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) {
        throw UsageError("embedding store: unknown id '" + id + "'");
    }
    return vectors_[it->second];
}

void EmbeddingStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("embedding store: cannot open for writing: " + path);
    }
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint32_t>(out, dim_);
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(ids_.size()));
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(ids_[i].size()));
        out.write(ids_[i].data(), static_cast<std::streamsize>(ids_[i].size()));
        out.write(reinterpret_cast<const char*>(vectors_[i].data()),
                  static_cast<std::streamsize>(vectors_[i].size() * sizeof(float)));
    }
    if (!out) {
        throw DataError("embedding store: write failed: " + path);
    }
}

EmbeddingStore EmbeddingStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("embedding store: cannot open: " + path);
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("embedding store: bad magic in " + path);
    }
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion) {
        throw FormatError("embedding store: unsupported version " + std::to_string(version) +
                          " in " + path);
    }
    EmbeddingStore store;
    store.dim_ = read_pod<std::uint32_t>(in, path);
    const auto count = read_pod<std::uint64_t>(in, path);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto id_len = read_pod<std::uint16_t>(in, path);
        std::string id(id_len, '\0');
        in.read(id.data(), id_len);
        std::vector<float> v(store.dim_);
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(float)));
        if (!in) {
            throw FormatError("embedding store: truncated file: " + path);
        }
        store.append(id, v);
    }
    char extra;
    in.read(&extra, 1);
    if (in) {
        throw FormatError("embedding store: trailing bytes in " + path);
    }
    return store;
}

}  // namespace cof
