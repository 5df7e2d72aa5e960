#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "cof/errors.hpp"

namespace cof {

// Lowercase word-level tokens split on whitespace and punctuation boundaries;
// each punctuation character is its own token.
std::vector<std::string> tokenize_words(const std::string& text);

// Immutable after build; encode() is pure and thread-safe.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCls = 2;
    static constexpr int kSep = 3;
    static constexpr int kReserved = 4;

    Vocabulary();

    // Tokens sorted by (frequency desc, lexicographic) after the reserved
    // ids. Deterministic for a fixed corpus order. An empty corpus yields a
    // vocabulary of only the reserved tokens.
    static Vocabulary build(const std::vector<std::string>& corpus, int min_freq, int max_size);

    int size() const { return static_cast<int>(id_to_token_.size()); }
    int id(const std::string& token) const;  // kUnk when unknown
    const std::string& token(int id) const;
    bool contains(const std::string& token) const;

    // One token per line, line number = id - 4 (reserved ids implicit).
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    void add(const std::string& token);

    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
};

struct TokenSequence {
    std::vector<int> ids;       // length == max_len used at encode time
    int attention_length = 0;   // non-pad positions; ids[0] is [CLS], last non-pad is [SEP]

    // Copy without trailing [PAD]; identical under attention masking.
    TokenSequence trimmed() const {
        TokenSequence t;
        t.ids.assign(ids.begin(), ids.begin() + attention_length);
        t.attention_length = attention_length;
        return t;
    }
};

// Lowercase, split, map unknowns to [UNK], wrap with [CLS]...[SEP], truncate
// the body so the total length fits max_len, right-pad with [PAD]. Keeps the
// head of the document (titles lead and carry the topical signal).
TokenSequence encode(const std::string& text, const Vocabulary& vocab, int max_len);

}  // namespace cof
