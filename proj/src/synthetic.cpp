#include "cof/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cof/rng.hpp"
#include "cof/tokenizer.hpp"

namespace cof {

void SyntheticCorpusSpec::validate() const {
    if (num_fields < 1 || hierarchy_depth < 3 || num_papers < 1 || num_queries < 0 ||
        vocab_size < num_fields * 3 || num_reviewers < 1 || num_submissions < 0 ||
        year_min > year_max || citation_density < 0.0) {
        throw UsageError("synthetic corpus spec: invalid parameters");
    }
}

int rating_from_jaccard(double jaccard, const std::array<double, 3>& thresholds) {
    if (!(thresholds[0] < thresholds[1] && thresholds[1] < thresholds[2]) ||
        thresholds[0] <= 0.0 || thresholds[2] > 1.0) {
        throw UsageError("rating thresholds must be strictly ascending in (0, 1]");
    }
    if (jaccard >= thresholds[2]) {
        return 3;
    }
    if (jaccard >= thresholds[1]) {
        return 2;
    }
    if (jaccard >= thresholds[0]) {
        return 1;
    }
    return 0;
}

namespace {

constexpr std::array<double, 3> kJudgmentThresholds = {0.2, 0.4, 0.7};

const std::array<const char*, 40> kSyllables = {
    "ra", "ne", "to", "mi", "sol", "ker", "vex", "lum", "tha", "gor",
    "pli", "zan", "dru", "fel", "qua", "rin", "sto", "bel", "cav", "dex",
    "eno", "fir", "gal", "hyt", "ixa", "jom", "kul", "lor", "mab", "nis",
    "oxe", "pru", "qel", "ryn", "sym", "tur", "ulv", "vor", "wix", "yal"};

std::string pseudoword(int i) {
    const int n = static_cast<int>(kSyllables.size());
    return std::string(kSyllables[static_cast<std::size_t>(i % n)]) +
           kSyllables[static_cast<std::size_t>((i / n) % n)] +
           kSyllables[static_cast<std::size_t>((i / (n * n)) % n)];
}

std::string zero_pad(int value, int width) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) {
        s.insert(s.begin(), '0');
    }
    return s;
}

struct FineField {
    std::string name;        // two tokens of its slice
    int layer = 3;
    int root = 0;            // layer-1 ancestor index
    int subarea = 0;         // layer-2 ancestor index
    std::vector<std::string> tokens;
};

struct Generator {
    const SyntheticCorpusSpec& spec;
    Rng field_rng, paper_rng, cite_rng, query_rng, reviewer_rng, judge_rng;

    std::vector<std::string> background;
    std::vector<FineField> fine_fields;
    std::vector<std::vector<std::string>> root_tokens;
    std::vector<std::vector<std::string>> subarea_tokens;
    std::vector<std::string> root_names;     // layer 1
    std::vector<std::string> subarea_names;  // layer 2 (root * 2 + k)
    std::vector<std::string> venues;

    explicit Generator(const SyntheticCorpusSpec& s)
        : spec(s),
          field_rng(Rng(s.seed).fork(1)),
          paper_rng(Rng(s.seed).fork(2)),
          cite_rng(Rng(s.seed).fork(3)),
          query_rng(Rng(s.seed).fork(4)),
          reviewer_rng(Rng(s.seed).fork(5)),
          judge_rng(Rng(s.seed).fork(6)) {}

    void build_fields() {
        const int roots = 3;
        const int subareas_per_root = 2;
        for (int r = 0; r < roots; ++r) {
            root_names.push_back("area " + pseudoword(40000 + r));
            for (int s = 0; s < subareas_per_root; ++s) {
                subarea_names.push_back("subarea " + pseudoword(41000 + r * subareas_per_root + s));
            }
            venues.push_back("conf-" + pseudoword(42000 + 2 * r));
            venues.push_back("conf-" + pseudoword(42001 + 2 * r));
        }
        venues.push_back("conf-general");

        // Token pools are hierarchical: a shared background, a slice per root
        // and per subarea, and a slice per fine field. Papers in sibling
        // fields then overlap through their ancestors' tokens, which is what
        // makes near-field citations textually visible.
        const int background_count = spec.vocab_size / 4;
        const int per_root = 24;
        const int per_subarea = 20;
        int next_token = 0;
        for (int i = 0; i < background_count; ++i) {
            background.push_back(pseudoword(next_token++));
        }
        for (int r = 0; r < roots; ++r) {
            std::vector<std::string> slice;
            for (int t = 0; t < per_root; ++t) {
                slice.push_back(pseudoword(next_token++));
            }
            root_tokens.push_back(std::move(slice));
        }
        for (int s = 0; s < roots * subareas_per_root; ++s) {
            std::vector<std::string> slice;
            for (int t = 0; t < per_subarea; ++t) {
                slice.push_back(pseudoword(next_token++));
            }
            subarea_tokens.push_back(std::move(slice));
        }
        const int per_field = (spec.vocab_size - next_token) / spec.num_fields;
        if (per_field < 3) {
            throw UsageError("synthetic corpus spec: vocab_size too small for num_fields");
        }
        for (int f = 0; f < spec.num_fields; ++f) {
            FineField field;
            field.layer = 3 + static_cast<int>(field_rng.uniform_int(0, spec.hierarchy_depth - 3));
            field.root = static_cast<int>(field_rng.uniform_int(0, roots - 1));
            field.subarea = field.root * subareas_per_root +
                            static_cast<int>(field_rng.uniform_int(0, subareas_per_root - 1));
            for (int t = 0; t < per_field; ++t) {
                field.tokens.push_back(pseudoword(next_token++));
            }
            field.name = field.tokens[0] + " " + field.tokens[1];
            fine_fields.push_back(std::move(field));
        }
    }

    static const std::string& pick(const std::vector<std::string>& pool, Rng& rng) {
        return pool[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
    }

    const std::string& field_token(const FineField& f, Rng& rng) { return pick(f.tokens, rng); }

    const std::string& background_token(Rng& rng) { return pick(background, rng); }

    // Content token for a paper tagged with `fields`: fine-field tokens
    // dominate, ancestor slices add sibling overlap.
    const std::string& content_token(const std::vector<int>& fields, Rng& rng) {
        const int f = fields[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(fields.size()) - 1))];
        const FineField& field = fine_fields[static_cast<std::size_t>(f)];
        const double roll = rng.uniform();
        if (roll < 0.60) {
            return pick(field.tokens, rng);
        }
        if (roll < 0.78) {
            return pick(subarea_tokens[static_cast<std::size_t>(field.subarea)], rng);
        }
        if (roll < 0.88) {
            return pick(root_tokens[static_cast<std::size_t>(field.root)], rng);
        }
        return background_token(rng);
    }

    std::vector<int> pick_fields(Rng& rng, int forced_primary = -1) {
        std::vector<int> out;
        const int primary = forced_primary >= 0
                                ? forced_primary
                                : static_cast<int>(rng.uniform_int(0, spec.num_fields - 1));
        out.push_back(primary);
        if (rng.bernoulli(0.35)) {
            // Secondary field, preferring a sibling under the same subarea.
            std::vector<int> siblings;
            for (int f = 0; f < spec.num_fields; ++f) {
                if (f != primary && fine_fields[static_cast<std::size_t>(f)].subarea ==
                                        fine_fields[static_cast<std::size_t>(primary)].subarea) {
                    siblings.push_back(f);
                }
            }
            int secondary;
            if (!siblings.empty() && rng.bernoulli(0.7)) {
                secondary = siblings[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(siblings.size()) - 1))];
            } else {
                secondary = static_cast<int>(rng.uniform_int(0, spec.num_fields - 1));
            }
            if (secondary != primary) {
                out.push_back(secondary);
            }
        }
        return out;
    }

    void fill_paper_content(CorpusRecord& rec, const std::vector<int>& fields, Rng& rng) {
        const FineField& primary = fine_fields[static_cast<std::size_t>(fields[0])];

        std::set<int> ancestors_roots, ancestors_subareas;
        for (const int f : fields) {
            const FineField& field = fine_fields[static_cast<std::size_t>(f)];
            ancestors_roots.insert(field.root);
            ancestors_subareas.insert(field.subarea);
        }
        for (const int r : ancestors_roots) {
            rec.fields.push_back({root_names[static_cast<std::size_t>(r)], 1});
        }
        for (const int s : ancestors_subareas) {
            rec.fields.push_back({subarea_names[static_cast<std::size_t>(s)], 2});
        }
        for (const int f : fields) {
            const FineField& field = fine_fields[static_cast<std::size_t>(f)];
            rec.fields.push_back({field.name, field.layer});
        }

        // Title: mostly primary-field tokens.
        const int title_len = static_cast<int>(rng.uniform_int(5, 7));
        for (int t = 0; t < title_len; ++t) {
            const std::string& tok =
                rng.bernoulli(0.72) ? field_token(primary, rng) : content_token(fields, rng);
            rec.title += (t == 0 ? "" : " ") + tok;
        }

        // Abstract: hierarchical mixture over the tagged fields.
        const int abstract_len = static_cast<int>(rng.uniform_int(16, 24));
        for (int t = 0; t < abstract_len; ++t) {
            rec.abstract_text += (t == 0 ? "" : " ") + content_token(fields, rng);
        }

        // Venue biased to the primary field's root.
        if (rng.bernoulli(0.8)) {
            const int v = primary.root * 2 + static_cast<int>(rng.uniform_int(0, 1));
            rec.venue = venues[static_cast<std::size_t>(v)];
        } else {
            rec.venue = venues[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(venues.size()) - 1))];
        }
    }
};

double fine_field_jaccard(const CorpusRecord& a, const CorpusRecord& b) {
    std::set<std::string> fa, fb;
    for (const FieldTag& t : a.fields) {
        if (t.layer >= 3) {
            fa.insert(t.name);
        }
    }
    for (const FieldTag& t : b.fields) {
        if (t.layer >= 3) {
            fb.insert(t.name);
        }
    }
    if (fa.empty() && fb.empty()) {
        return 0.0;
    }
    std::size_t inter = 0;
    for (const std::string& f : fa) {
        inter += fb.count(f);
    }
    const std::size_t uni = fa.size() + fb.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

SyntheticOutput generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
    spec.validate();
    Generator gen(spec);
    gen.build_fields();

    SyntheticOutput out;

    // Author pool with home fields; reviewers are later drawn from it.
    const int num_authors = spec.num_reviewers + std::max(spec.num_papers / 12, 8);
    std::vector<std::vector<int>> author_home(static_cast<std::size_t>(num_authors));
    std::vector<std::vector<int>> field_authors(static_cast<std::size_t>(spec.num_fields));
    for (int a = 0; a < num_authors; ++a) {
        const int homes = static_cast<int>(gen.paper_rng.uniform_int(2, 3));
        for (int h = 0; h < homes; ++h) {
            const int f = static_cast<int>(gen.paper_rng.uniform_int(0, spec.num_fields - 1));
            author_home[static_cast<std::size_t>(a)].push_back(f);
            field_authors[static_cast<std::size_t>(f)].push_back(a);
        }
    }

    // Papers.
    std::vector<std::vector<int>> paper_fields;
    for (int i = 0; i < spec.num_papers; ++i) {
        CorpusRecord rec;
        rec.id = "p" + zero_pad(i, 5);
        rec.year = spec.year_min +
                   static_cast<int>(gen.paper_rng.uniform_int(0, spec.year_max - spec.year_min));
        // The first num_fields papers cover every fine field once, so any
        // corpus with num_papers >= num_fields represents the full hierarchy.
        const std::vector<int> fields =
            gen.pick_fields(gen.paper_rng, i < spec.num_fields ? i : -1);
        gen.fill_paper_content(rec, fields, gen.paper_rng);

        // Authors: prefer people at home in the primary field.
        const int num_paper_authors = static_cast<int>(gen.paper_rng.uniform_int(2, 4));
        std::set<int> chosen;
        const auto& home_pool = field_authors[static_cast<std::size_t>(fields[0])];
        while (static_cast<int>(chosen.size()) < num_paper_authors) {
            int a;
            if (!home_pool.empty() && gen.paper_rng.bernoulli(0.6)) {
                a = home_pool[static_cast<std::size_t>(gen.paper_rng.uniform_int(
                    0, static_cast<std::int64_t>(home_pool.size()) - 1))];
            } else {
                a = static_cast<int>(gen.paper_rng.uniform_int(0, num_authors - 1));
            }
            chosen.insert(a);
        }
        for (const int a : chosen) {
            rec.authors.push_back("a" + zero_pad(a, 4));
        }
        paper_fields.push_back(fields);
        out.papers.push_back(std::move(rec));
    }

    // Citations: chronological; tiered sampling keeps citations topically
    // close (same fine field most often, then the same subarea/root), which
    // is the structure the citation factor has to learn.
    std::vector<std::size_t> order(out.papers.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::make_pair(out.papers[a].year, out.papers[a].id) <
               std::make_pair(out.papers[b].year, out.papers[b].id);
    });

    // Older-paper pools per fine field / subarea / root, grown as the
    // chronological sweep advances.
    std::vector<std::vector<std::size_t>> by_field(
        static_cast<std::size_t>(spec.num_fields));
    std::vector<std::vector<std::size_t>> by_subarea(gen.subarea_tokens.size());
    std::vector<std::vector<std::size_t>> by_root(gen.root_tokens.size());
    std::vector<std::size_t> all_older;

    auto cite_targets = [&](const std::vector<int>& src_fields, int count, Rng& rng) {
        std::vector<std::string> refs;
        if (all_older.empty() || count <= 0) {
            return refs;
        }
        std::set<std::size_t> picked;
        for (int attempt = 0; attempt < count * 8 && static_cast<int>(picked.size()) < count;
             ++attempt) {
            const int f = src_fields[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(src_fields.size()) - 1))];
            const FineField& field = gen.fine_fields[static_cast<std::size_t>(f)];
            const double roll = rng.uniform();
            const std::vector<std::size_t>* pool = &all_older;
            if (roll < 0.45 && !by_field[static_cast<std::size_t>(f)].empty()) {
                pool = &by_field[static_cast<std::size_t>(f)];
            } else if (roll < 0.75 &&
                       !by_subarea[static_cast<std::size_t>(field.subarea)].empty()) {
                pool = &by_subarea[static_cast<std::size_t>(field.subarea)];
            } else if (roll < 0.90 && !by_root[static_cast<std::size_t>(field.root)].empty()) {
                pool = &by_root[static_cast<std::size_t>(field.root)];
            }
            picked.insert((*pool)[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(pool->size()) - 1))]);
        }
        for (const std::size_t k : picked) {
            refs.push_back(out.papers[k].id);
        }
        std::sort(refs.begin(), refs.end());
        return refs;
    };

    for (const std::size_t idx : order) {
        CorpusRecord& rec = out.papers[idx];
        const int count = static_cast<int>(std::clamp(
            std::llround(gen.cite_rng.normal(spec.citation_density, spec.citation_density / 3.0)),
            0LL, 14LL));
        rec.references = cite_targets(paper_fields[idx], count, gen.cite_rng);
        for (const int f : paper_fields[idx]) {
            by_field[static_cast<std::size_t>(f)].push_back(idx);
            const FineField& field = gen.fine_fields[static_cast<std::size_t>(f)];
            by_subarea[static_cast<std::size_t>(field.subarea)].push_back(idx);
            by_root[static_cast<std::size_t>(field.root)].push_back(idx);
        }
        all_older.push_back(idx);
    }

    // Submissions: held-out recent papers citing into the corpus.
    for (int i = 0; i < spec.num_submissions; ++i) {
        CorpusRecord rec;
        rec.id = "s" + zero_pad(i, 3);
        rec.year = spec.year_max + 1;
        const std::vector<int> fields = gen.pick_fields(gen.paper_rng);
        gen.fill_paper_content(rec, fields, gen.paper_rng);
        const int count = static_cast<int>(std::clamp(
            std::llround(gen.cite_rng.normal(spec.citation_density, spec.citation_density / 3.0)),
            1LL, 14LL));
        rec.references = cite_targets(fields, count, gen.cite_rng);
        out.submissions.push_back(std::move(rec));
    }

    // Reviewers: the most prolific authors.
    std::unordered_map<std::string, std::vector<std::string>> papers_by_author;
    for (const CorpusRecord& rec : out.papers) {
        for (const std::string& a : rec.authors) {
            papers_by_author[a].push_back(rec.id);
        }
    }
    std::vector<std::pair<std::string, std::size_t>> author_counts;
    for (const auto& [author, ids] : papers_by_author) {
        author_counts.emplace_back(author, ids.size());
    }
    std::sort(author_counts.begin(), author_counts.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    const int reviewer_count =
        std::min<int>(spec.num_reviewers, static_cast<int>(author_counts.size()));
    for (int r = 0; r < reviewer_count; ++r) {
        ReviewerRecord rec;
        // Reviewer ids are author ids so author-rank profile filters apply.
        rec.reviewer_id = author_counts[static_cast<std::size_t>(r)].first;
        rec.paper_ids = papers_by_author[rec.reviewer_id];
        std::sort(rec.paper_ids.begin(), rec.paper_ids.end());
        out.reviewers.push_back(std::move(rec));
    }

    // Search log: queries from titles; clicked docs score 1..14, shown-but-
    // unclicked docs score 0. A small share of queries has no click at all.
    for (int q = 0; q < spec.num_queries; ++q) {
        SearchQuery query;
        query.query_id = "q" + zero_pad(q, 4);
        const std::size_t src = static_cast<std::size_t>(
            gen.query_rng.uniform_int(0, static_cast<std::int64_t>(out.papers.size()) - 1));
        const CorpusRecord& paper = out.papers[src];
        const std::vector<std::string> title_tokens = tokenize_words(paper.title);
        const int qlen = static_cast<int>(
            gen.query_rng.uniform_int(3, std::min<std::int64_t>(5, title_tokens.size())));
        for (int t = 0; t < qlen; ++t) {
            const std::string& tok = title_tokens[static_cast<std::size_t>(
                gen.query_rng.uniform_int(0, static_cast<std::int64_t>(title_tokens.size()) - 1))];
            query.text += (t == 0 ? "" : " ") + tok;
        }

        // Every 50th query has no click, exercising the builder's skip path.
        const bool all_zero = (q % 50) == 1;
        std::set<std::size_t> shown;
        shown.insert(src);
        // Half the shown list is drawn uniformly, half prefers the source
        // paper's subarea so unclicked results are deceptively close.
        while (shown.size() < 10) {
            std::size_t cand = static_cast<std::size_t>(gen.query_rng.uniform_int(
                0, static_cast<std::int64_t>(out.papers.size()) - 1));
            if (gen.query_rng.bernoulli(0.5)) {
                for (int probe = 0; probe < 40; ++probe) {
                    const std::size_t c2 = static_cast<std::size_t>(gen.query_rng.uniform_int(
                        0, static_cast<std::int64_t>(out.papers.size()) - 1));
                    if (gen.fine_fields[static_cast<std::size_t>(paper_fields[c2][0])].subarea ==
                        gen.fine_fields[static_cast<std::size_t>(paper_fields[src][0])].subarea) {
                        cand = c2;
                        break;
                    }
                }
            }
            shown.insert(cand);
        }
        for (const std::size_t s : shown) {
            SearchResult res;
            res.paper_id = out.papers[s].id;
            if (!all_zero && s == src) {
                res.score = static_cast<int>(gen.query_rng.uniform_int(1, 14));
            } else if (!all_zero && gen.query_rng.bernoulli(0.08) &&
                       fine_field_jaccard(out.papers[s], paper) > 0.0) {
                res.score = static_cast<int>(gen.query_rng.uniform_int(1, 14));
            } else {
                res.score = 0;
            }
            query.results.push_back(std::move(res));
        }
        out.search_log.queries.push_back(std::move(query));
    }

    // Judgments: max field-overlap Jaccard over the profile, discretized.
    CorpusIndex index(out.papers);
    for (const CorpusRecord& sub : out.submissions) {
        for (const ReviewerRecord& reviewer : out.reviewers) {
            if (!gen.judge_rng.bernoulli(0.7)) {
                continue;  // annotate a subset, as real campaigns do
            }
            double best = 0.0;
            for (const std::string& pid : reviewer.paper_ids) {
                best = std::max(best, fine_field_jaccard(sub, index.at(pid)));
            }
            RelevanceJudgment j;
            j.paper_id = sub.id;
            j.reviewer_id = reviewer.reviewer_id;
            j.score = rating_from_jaccard(best, kJudgmentThresholds);
            out.judgments.push_back(std::move(j));
        }
    }

    return out;
}

}  // namespace cof
