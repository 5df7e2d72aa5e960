#include "cof/corpus_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace cof {

using nlohmann::json;

bool CorpusRecord::has_fine_field() const {
    for (const FieldTag& f : fields) {
        if (f.layer >= 3) {
            return true;
        }
    }
    return false;
}

bool CorpusRecord::shares_fine_field(const CorpusRecord& other) const {
    for (const FieldTag& a : fields) {
        if (a.layer < 3) {
            continue;
        }
        for (const FieldTag& b : other.fields) {
            if (b.layer >= 3 && a.name == b.name) {
                return true;
            }
        }
    }
    return false;
}

CorpusIndex::CorpusIndex(const std::vector<CorpusRecord>& records) {
    for (const CorpusRecord& r : records) {
        if (!by_id_.emplace(r.id, &r).second) {
            throw DataError("corpus: duplicate paper id '" + r.id + "'");
        }
    }
}

const CorpusRecord* CorpusIndex::find(const std::string& id) const {
    const auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : it->second;
}

const CorpusRecord& CorpusIndex::at(const std::string& id) const {
    const CorpusRecord* r = find(id);
    if (r == nullptr) {
        throw DataError("corpus: unknown paper id '" + id + "'");
    }
    return *r;
}

namespace {

struct LineReader {
    std::ifstream in;
    std::string path;
    int line_no = 0;

    explicit LineReader(const std::string& p) : in(p), path(p) {
        if (!in) {
            throw DataError(p + ": cannot open");
        }
    }

    bool next(std::string& line) {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (!line.empty()) {
                return true;
            }
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw DataError(path + ":" + std::to_string(line_no) + ": " + msg);
    }

    json parse(const std::string& line) const {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            fail("malformed JSON object");
        }
        return j;
    }

    void check_keys(const json& j, const std::set<std::string>& known,
                    std::vector<std::string>* warnings) const {
        if (warnings == nullptr) {
            return;
        }
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (known.count(key) == 0) {
                warnings->push_back(path + ":" + std::to_string(line_no) +
                                    ": ignoring unknown key '" + key + "'");
            }
        }
    }
};

template <typename T>
T get_or(const LineReader& reader, const json& j, const char* key, const T& fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return fallback;
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        reader.fail(std::string("bad value for key '") + key + "'");
    }
}

template <typename T>
T get_required(const LineReader& reader, const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) {
        reader.fail(std::string("missing required key '") + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        reader.fail(std::string("bad value for key '") + key + "'");
    }
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError(path + ": cannot open for writing");
    }
    for (const std::string& l : lines) {
        out << l << '\n';
    }
    if (!out) {
        throw DataError(path + ": write failed");
    }
}

}  // namespace

std::vector<CorpusRecord> load_corpus(const std::string& path,
                                      std::vector<std::string>* warnings) {
    static const std::set<std::string> known = {"id",     "title",  "abstract", "year",
                                                "venue",  "authors", "fields",  "references"};
    LineReader reader(path);
    std::vector<CorpusRecord> records;
    std::string line;
    while (reader.next(line)) {
        const json j = reader.parse(line);
        reader.check_keys(j, known, warnings);
        CorpusRecord r;
        r.id = get_required<std::string>(reader, j, "id");
        r.title = get_or<std::string>(reader, j, "title", "");
        r.abstract_text = get_or<std::string>(reader, j, "abstract", "");
        r.year = get_or<int>(reader, j, "year", 0);
        if (r.year != 0 && (r.year < 1000 || r.year > 9999)) {
            reader.fail("bad value for key 'year': expected 4-digit integer or absent");
        }
        r.venue = get_or<std::string>(reader, j, "venue", "");
        r.authors = get_or<std::vector<std::string>>(reader, j, "authors", {});
        r.references = get_or<std::vector<std::string>>(reader, j, "references", {});
        if (j.contains("fields")) {
            if (!j["fields"].is_array()) {
                reader.fail("bad value for key 'fields'");
            }
            for (const json& f : j["fields"]) {
                if (!f.is_object()) {
                    reader.fail("bad value for key 'fields'");
                }
                FieldTag tag;
                tag.name = get_required<std::string>(reader, f, "name");
                tag.layer = get_required<int>(reader, f, "layer");
                r.fields.push_back(std::move(tag));
            }
        }
        records.push_back(std::move(r));
    }
    return records;
}

void save_corpus(const std::string& path, const std::vector<CorpusRecord>& records) {
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const CorpusRecord& r : records) {
        json j;
        j["id"] = r.id;
        j["title"] = r.title;
        j["abstract"] = r.abstract_text;
        if (r.year != 0) {
            j["year"] = r.year;
        }
        j["venue"] = r.venue;
        j["authors"] = r.authors;
        json fields = json::array();
        for (const FieldTag& f : r.fields) {
            fields.push_back({{"name", f.name}, {"layer", f.layer}});
        }
        j["fields"] = std::move(fields);
        j["references"] = r.references;
        lines.push_back(j.dump());
    }
    write_lines(path, lines);
}

std::vector<ReviewerRecord> load_reviewers(const std::string& path,
                                           std::vector<std::string>* warnings) {
    static const std::set<std::string> known = {"reviewer_id", "paper_ids"};
    LineReader reader(path);
    std::vector<ReviewerRecord> reviewers;
    std::set<std::string> seen;
    std::string line;
    while (reader.next(line)) {
        const json j = reader.parse(line);
        reader.check_keys(j, known, warnings);
        ReviewerRecord r;
        r.reviewer_id = get_required<std::string>(reader, j, "reviewer_id");
        r.paper_ids = get_required<std::vector<std::string>>(reader, j, "paper_ids");
        if (!seen.insert(r.reviewer_id).second) {
            reader.fail("duplicate reviewer_id '" + r.reviewer_id + "'");
        }
        reviewers.push_back(std::move(r));
    }
    return reviewers;
}

void save_reviewers(const std::string& path, const std::vector<ReviewerRecord>& reviewers) {
    std::vector<std::string> lines;
    lines.reserve(reviewers.size());
    for (const ReviewerRecord& r : reviewers) {
        lines.push_back(json{{"reviewer_id", r.reviewer_id}, {"paper_ids", r.paper_ids}}.dump());
    }
    write_lines(path, lines);
}

std::vector<RelevanceJudgment> load_judgments(const std::string& path,
                                              std::vector<std::string>* warnings) {
    static const std::set<std::string> known = {"paper_id", "reviewer_id", "score"};
    LineReader reader(path);
    std::vector<RelevanceJudgment> judgments;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    while (reader.next(line)) {
        const json j = reader.parse(line);
        reader.check_keys(j, known, warnings);
        RelevanceJudgment r;
        r.paper_id = get_required<std::string>(reader, j, "paper_id");
        r.reviewer_id = get_required<std::string>(reader, j, "reviewer_id");
        r.score = get_required<int>(reader, j, "score");
        if (r.score < 0 || r.score > 3) {
            reader.fail("bad value for key 'score': must be an integer in [0, 3]");
        }
        if (!seen.emplace(r.paper_id, r.reviewer_id).second) {
            reader.fail("duplicate (paper_id, reviewer_id) pair ('" + r.paper_id + "', '" +
                        r.reviewer_id + "')");
        }
        judgments.push_back(std::move(r));
    }
    return judgments;
}

void save_judgments(const std::string& path, const std::vector<RelevanceJudgment>& judgments) {
    std::vector<std::string> lines;
    lines.reserve(judgments.size());
    for (const RelevanceJudgment& r : judgments) {
        lines.push_back(json{{"paper_id", r.paper_id},
                             {"reviewer_id", r.reviewer_id},
                             {"score", r.score}}
                            .dump());
    }
    write_lines(path, lines);
}

SearchLog load_search_log(const std::string& path, std::vector<std::string>* warnings) {
    static const std::set<std::string> known = {"query_id", "text", "results"};
    LineReader reader(path);
    SearchLog log;
    std::string line;
    while (reader.next(line)) {
        const json j = reader.parse(line);
        reader.check_keys(j, known, warnings);
        SearchQuery q;
        q.query_id = get_required<std::string>(reader, j, "query_id");
        q.text = get_required<std::string>(reader, j, "text");
        const auto it = j.find("results");
        if (it == j.end() || !it->is_array()) {
            reader.fail("missing required key 'results'");
        }
        for (const json& res : *it) {
            SearchResult sr;
            sr.paper_id = get_required<std::string>(reader, res, "paper_id");
            sr.score = get_required<int>(reader, res, "score");
            if (sr.score < 0 || sr.score > 14) {
                reader.fail("bad value for key 'score': must be in [0, 14]");
            }
            q.results.push_back(std::move(sr));
        }
        log.queries.push_back(std::move(q));
    }
    return log;
}

void save_search_log(const std::string& path, const SearchLog& log) {
    std::vector<std::string> lines;
    lines.reserve(log.queries.size());
    for (const SearchQuery& q : log.queries) {
        json results = json::array();
        for (const SearchResult& r : q.results) {
            results.push_back({{"paper_id", r.paper_id}, {"score", r.score}});
        }
        lines.push_back(json{{"query_id", q.query_id}, {"text", q.text}, {"results", results}}
                            .dump());
    }
    write_lines(path, lines);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void save_rankings_csv(const std::string& path, const std::vector<RankingRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError(path + ": cannot open for writing");
    }
    out << "paper_id,reviewer_id,rank,f_total,f_semantic,f_topic,f_citation,variant\n";
    for (const RankingRow& r : rows) {
        out << r.paper_id << ',' << r.reviewer_id << ',' << r.rank << ','
            << format_double(r.f_total) << ',' << format_double(r.f_semantic) << ','
            << format_double(r.f_topic) << ',' << format_double(r.f_citation) << ','
            << r.variant << '\n';
    }
    if (!out) {
        throw DataError(path + ": write failed");
    }
}

std::vector<RankingRow> load_rankings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError(path + ": cannot open");
    }
    std::vector<RankingRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line_no == 1) {
            continue;  // header
        }
        std::stringstream ss(line);
        std::string part;
        std::vector<std::string> parts;
        while (std::getline(ss, part, ',')) {
            parts.push_back(part);
        }
        if (parts.size() != 8) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": expected 8 comma-separated columns");
        }
        RankingRow r;
        r.paper_id = parts[0];
        r.reviewer_id = parts[1];
        try {
            r.rank = std::stoi(parts[2]);
            r.f_total = std::stod(parts[3]);
            r.f_semantic = std::stod(parts[4]);
            r.f_topic = std::stod(parts[5]);
            r.f_citation = std::stod(parts[6]);
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(line_no) + ": bad numeric column");
        }
        r.variant = parts[7];
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace cof
