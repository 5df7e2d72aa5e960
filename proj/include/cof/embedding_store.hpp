#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cof/errors.hpp"
#include "cof/tensor.hpp"

namespace cof {

// Persisted factor-aware embeddings at float32.
// Layout: magic "COFE" (4 bytes), version u32 LE, dim u32 LE, count u64 LE,
// then per record [id_len u16 LE][UTF-8 id][dim x f32 LE].
class EmbeddingStore {
public:
    EmbeddingStore() = default;
    explicit EmbeddingStore(std::uint32_t dim) : dim_(dim) {}

    std::uint32_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }

    // Appends one record; the first append of a default-constructed store
    // fixes the dimension. Duplicate ids and dim mismatches are rejected.
    void append(const std::string& id, const std::vector<float>& vector);
    void append(const std::string& id, const Embedding& vector);

    bool contains(const std::string& id) const { return index_.count(id) > 0; }
    const std::vector<float>& vector(const std::string& id) const;
    const std::string& id_at(std::size_t i) const { return ids_[i]; }
    const std::vector<float>& vector_at(std::size_t i) const { return vectors_[i]; }

    void save(const std::string& path) const;
    static EmbeddingStore load(const std::string& path);

private:
    std::uint32_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<std::vector<float>> vectors_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace cof
