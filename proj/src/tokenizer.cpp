#include "cof/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

namespace cof {

std::vector<std::string> tokenize_words(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            out.push_back(current);
            current.clear();
        }
    };
    for (const char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            flush();
        } else if (std::isalnum(c) || c >= 0x80) {
            // Bytes >= 0x80 (UTF-8 continuation/multibyte) are kept verbatim.
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
            out.emplace_back(1, raw);
        }
    }
    flush();
    return out;
}

Vocabulary::Vocabulary() {
    add("[PAD]");
    add("[UNK]");
    add("[CLS]");
    add("[SEP]");
}

void Vocabulary::add(const std::string& token) {
    token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
    id_to_token_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus, int min_freq, int max_size) {
    if (max_size < kReserved) {
        throw UsageError("build_vocab: max_size must be >= " + std::to_string(kReserved));
    }
    std::map<std::string, long long> freq;  // ordered map fixes the lexicographic tie-break
    for (const std::string& doc : corpus) {
        for (const std::string& tok : tokenize_words(doc)) {
            ++freq[tok];
        }
    }
    std::vector<std::pair<std::string, long long>> entries(freq.begin(), freq.end());
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocabulary vocab;
    for (const auto& [tok, count] : entries) {
        if (count < min_freq) {
            continue;
        }
        if (vocab.size() >= max_size) {
            break;
        }
        vocab.add(tok);
    }
    return vocab;
}

int Vocabulary::id(const std::string& token) const {
    const auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) {
        throw UsageError("vocabulary: id " + std::to_string(id) + " out of range");
    }
    return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(const std::string& token) const {
    return token_to_id_.count(token) > 0;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw DataError("vocabulary: cannot open for writing: " + path);
    }
    for (int i = kReserved; i < size(); ++i) {
        out << id_to_token_[static_cast<std::size_t>(i)] << '\n';
    }
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("vocabulary: cannot open: " + path);
    }
    Vocabulary vocab;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (vocab.contains(line)) {
            throw DataError("vocabulary: duplicate token '" + line + "' in " + path);
        }
        vocab.add(line);
    }
    return vocab;
}

TokenSequence encode(const std::string& text, const Vocabulary& vocab, int max_len) {
    if (max_len < 2) {
        throw UsageError("encode: max_len must be >= 2");
    }
    const std::vector<std::string> words = tokenize_words(text);
    const std::size_t body = std::min(words.size(), static_cast<std::size_t>(max_len - 2));

    TokenSequence seq;
    seq.ids.reserve(static_cast<std::size_t>(max_len));
    seq.ids.push_back(Vocabulary::kCls);
    for (std::size_t i = 0; i < body; ++i) {
        seq.ids.push_back(vocab.id(words[i]));
    }
    seq.ids.push_back(Vocabulary::kSep);
    seq.attention_length = static_cast<int>(seq.ids.size());
    seq.ids.resize(static_cast<std::size_t>(max_len), Vocabulary::kPad);
    return seq;
}

}  // namespace cof
