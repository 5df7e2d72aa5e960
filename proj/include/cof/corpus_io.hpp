#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "cof/errors.hpp"

namespace cof {

struct FieldTag {
    std::string name;
    int layer = 0;  // hierarchy depth; layer >= 3 counts as fine-grained
};

struct CorpusRecord {
    std::string id;
    std::string title;
    std::string abstract_text;
    int year = 0;  // 0 = absent
    std::string venue;
    std::vector<std::string> authors;      // ordered author ids
    std::vector<FieldTag> fields;
    std::vector<std::string> references;   // cited paper ids

    std::string text() const {
        return abstract_text.empty() ? title : title + " " + abstract_text;
    }
    bool has_fine_field() const;
    bool shares_fine_field(const CorpusRecord& other) const;
};

struct ReviewerRecord {
    std::string reviewer_id;
    std::vector<std::string> paper_ids;
};

struct RelevanceJudgment {
    std::string paper_id;
    std::string reviewer_id;
    int score = 0;  // 0..3
};

struct SearchResult {
    std::string paper_id;
    int score = 0;  // 0..14, click-through scale; 0 = shown but not clicked
};

struct SearchQuery {
    std::string query_id;
    std::string text;
    std::vector<SearchResult> results;
};

struct SearchLog {
    std::vector<SearchQuery> queries;
};

// Id -> record lookup over a corpus that must outlive the index.
class CorpusIndex {
public:
    CorpusIndex() = default;
    explicit CorpusIndex(const std::vector<CorpusRecord>& records);
    const CorpusRecord* find(const std::string& id) const;
    const CorpusRecord& at(const std::string& id) const;
    std::size_t size() const { return by_id_.size(); }

private:
    std::unordered_map<std::string, const CorpusRecord*> by_id_;
};

// JSONL loaders/savers. Parse errors name the file, line number, and the
// offending key; unknown fields are ignored and reported through *warnings.
std::vector<CorpusRecord> load_corpus(const std::string& path,
                                      std::vector<std::string>* warnings = nullptr);
void save_corpus(const std::string& path, const std::vector<CorpusRecord>& records);

std::vector<ReviewerRecord> load_reviewers(const std::string& path,
                                           std::vector<std::string>* warnings = nullptr);
void save_reviewers(const std::string& path, const std::vector<ReviewerRecord>& reviewers);

std::vector<RelevanceJudgment> load_judgments(const std::string& path,
                                              std::vector<std::string>* warnings = nullptr);
void save_judgments(const std::string& path, const std::vector<RelevanceJudgment>& judgments);

SearchLog load_search_log(const std::string& path, std::vector<std::string>* warnings = nullptr);
void save_search_log(const std::string& path, const SearchLog& log);

// Ranking rows as written by the match/ablate commands:
// paper_id,reviewer_id,rank,f_total,f_semantic,f_topic,f_citation,variant
struct RankingRow {
    std::string paper_id;
    std::string reviewer_id;
    int rank = 0;
    double f_total = 0.0;
    double f_semantic = 0.0;
    double f_topic = 0.0;
    double f_citation = 0.0;
    std::string variant;
};

void save_rankings_csv(const std::string& path, const std::vector<RankingRow>& rows);
std::vector<RankingRow> load_rankings_csv(const std::string& path);

// Deterministic float formatting shared by all CSV writers.
std::string format_double(double v);

}  // namespace cof
