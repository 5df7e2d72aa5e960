#include "cof/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cof/rng.hpp"
#include "cof/synthetic.hpp"

namespace cof {

JudgmentSet::JudgmentSet(const std::vector<RelevanceJudgment>& judgments) {
    for (const RelevanceJudgment& j : judgments) {
        if (j.score < 0 || j.score > 3) {
            throw DataError("judgment (" + j.paper_id + ", " + j.reviewer_id +
                            "): score out of the 0-3 range");
        }
        if (!by_paper_[j.paper_id].emplace(j.reviewer_id, j.score).second) {
            throw DataError("judgment (" + j.paper_id + ", " + j.reviewer_id + "): duplicate pair");
        }
    }
}

const std::map<std::string, int>* JudgmentSet::paper_scores(const std::string& paper_id) const {
    const auto it = by_paper_.find(paper_id);
    return it == by_paper_.end() ? nullptr : &it->second;
}

namespace {

// Ranking restricted to R_p, in ranking order.
std::vector<int> judged_scores_in_order(const std::vector<std::string>& ranked,
                                        const std::map<std::string, int>& judgments) {
    std::vector<int> scores;
    scores.reserve(judgments.size());
    for (const std::string& r : ranked) {
        const auto it = judgments.find(r);
        if (it != judgments.end()) {
            scores.push_back(it->second);
        }
    }
    return scores;
}

}  // namespace

double precision_at_k(const std::vector<std::string>& ranked_reviewers,
                      const std::map<std::string, int>& judgments, int k, PrecisionMode mode,
                      int* short_rp) {
    if (k < 1) {
        throw UsageError("precision_at_k: K must be >= 1");
    }
    const std::vector<int> scores = judged_scores_in_order(ranked_reviewers, judgments);
    if (scores.size() < static_cast<std::size_t>(k) && short_rp != nullptr) {
        ++*short_rp;
    }
    int hits = 0;
    for (std::size_t i = 0; i < scores.size() && i < static_cast<std::size_t>(k); ++i) {
        if (mode == PrecisionMode::soft ? scores[i] >= 2 : scores[i] == 3) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(k);  // denominator stays K
}

double precision_at_k_liu(const std::vector<std::string>& ranked_reviewers,
                          const std::map<std::string, int>& judgments, int k) {
    if (k < 1) {
        throw UsageError("precision_at_k_liu: K must be >= 1");
    }
    const std::vector<int> scores = judged_scores_in_order(ranked_reviewers, judgments);
    int sum = 0;
    for (std::size_t i = 0; i < scores.size() && i < static_cast<std::size_t>(k); ++i) {
        sum += scores[i];
    }
    return static_cast<double>(sum) / (3.0 * static_cast<double>(k));
}

double precision_at_k_anjum(const std::vector<std::string>& ranked_reviewers,
                            const std::map<std::string, int>& judgments, int k) {
    if (k < 1) {
        throw UsageError("precision_at_k_anjum: K must be >= 1");
    }
    const std::vector<int> scores = judged_scores_in_order(ranked_reviewers, judgments);
    if (scores.empty()) {
        return 0.0;
    }
    const std::size_t denom = std::min<std::size_t>(static_cast<std::size_t>(k), scores.size());
    int hits = 0;
    for (std::size_t i = 0; i < denom; ++i) {
        if (scores[i] >= 2) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(denom);
}

MetricReport evaluate_rankings(
    const std::map<std::string, std::vector<std::string>>& ranked_by_paper,
    const JudgmentSet& judgments, const std::vector<int>& ks) {
    MetricReport report;
    std::map<std::string, std::pair<double, int>> sums;  // metric -> (sum, count)

    for (const auto& [paper_id, scores] : judgments.by_paper()) {
        const auto rit = ranked_by_paper.find(paper_id);
        if (rit == ranked_by_paper.end()) {
            continue;  // no ranking emitted for this paper
        }
        int short_rp = 0;
        std::map<std::string, double>& row = report.per_paper[paper_id];
        for (const int k : ks) {
            const std::string suffix = "@" + std::to_string(k);
            row["soft_p" + suffix] =
                precision_at_k(rit->second, scores, k, PrecisionMode::soft, &short_rp);
            row["hard_p" + suffix] =
                precision_at_k(rit->second, scores, k, PrecisionMode::hard, &short_rp);
            row["liu_p" + suffix] = precision_at_k_liu(rit->second, scores, k);
            row["anjum_p" + suffix] = precision_at_k_anjum(rit->second, scores, k);
        }
        if (short_rp > 0) {
            ++report.short_rp_papers;
        }
        for (const auto& [metric, value] : row) {
            auto& [sum, count] = sums[metric];
            sum += value;
            ++count;
        }
    }

    for (const auto& [metric, agg] : sums) {
        report.values[metric] = agg.second == 0 ? 0.0 : agg.first / agg.second;
    }
    // Average of the four primary metrics at the first two Ks (soft/hard x K).
    double avg = 0.0;
    int n = 0;
    for (const int k : ks) {
        for (const char* prefix : {"soft_p@", "hard_p@"}) {
            const auto it = report.values.find(prefix + std::to_string(k));
            if (it != report.values.end()) {
                avg += it->second;
                ++n;
            }
        }
        if (n == 4) {
            break;
        }
    }
    report.average = n == 0 ? 0.0 : avg / n;
    return report;
}

void save_metric_report_csv(const std::string& path, const MetricReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError(path + ": cannot open for writing");
    }
    out << "metric,value\n";
    for (const auto& [metric, value] : report.values) {
        out << metric << ',' << format_double(value) << '\n';
    }
    out << "average_primary," << format_double(report.average) << '\n';
    if (!out) {
        throw DataError(path + ": write failed");
    }
}

std::string metric_report_table(const MetricReport& report) {
    std::ostringstream out;
    out << "metric            value\n";
    for (const auto& [metric, value] : report.values) {
        out << metric;
        for (std::size_t pad = metric.size(); pad < 18; ++pad) {
            out << ' ';
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", value);
        out << buf << '\n';
    }
    out << "average_primary   ";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", report.average);
    out << buf << '\n';
    if (report.short_rp_papers > 0) {
        out << "warning: " << report.short_rp_papers
            << " paper(s) had |R_p| < K; Eq.-(12) denominators stay K\n";
    }
    return out.str();
}

int jaccard_to_rating(const std::set<std::string>& aspects_p,
                      const std::set<std::string>& aspects_r,
                      const std::array<double, 3>& thresholds) {
    std::size_t inter = 0;
    for (const std::string& a : aspects_p) {
        inter += aspects_r.count(a);
    }
    const std::size_t uni = aspects_p.size() + aspects_r.size() - inter;
    const double jaccard = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    return rating_from_jaccard(jaccard, thresholds);
}

int aggregate_annotations(const std::vector<int>& ratings) {
    if (ratings.empty()) {
        throw UsageError("aggregate_annotations: no ratings");
    }
    double sum = 0.0;
    for (const int r : ratings) {
        if (r < 0 || r > 3) {
            throw UsageError("aggregate_annotations: rating out of the 0-3 range");
        }
        sum += r;
    }
    const double mean = sum / static_cast<double>(ratings.size());
    return static_cast<int>(std::floor(mean + 0.5));  // half-up
}

ZTestResult z_test(const std::vector<double>& runs_a, const std::vector<double>& runs_b) {
    if (runs_a.size() < 2 || runs_b.size() < 2) {
        throw UsageError("z_test: each run list needs at least 2 values");
    }
    auto mean_var = [](const std::vector<double>& runs) {
        double mean = 0.0;
        for (const double v : runs) {
            mean += v;
        }
        mean /= static_cast<double>(runs.size());
        double var = 0.0;
        for (const double v : runs) {
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<double>(runs.size() - 1);  // sample variance
        return std::make_pair(mean, var);
    };
    const auto [mean_a, var_a] = mean_var(runs_a);
    const auto [mean_b, var_b] = mean_var(runs_b);

    ZTestResult result;
    const double denom = std::sqrt(var_a / static_cast<double>(runs_a.size()) +
                                   var_b / static_cast<double>(runs_b.size()));
    if (denom == 0.0) {
        result.z = 0.0;
        result.p_value = mean_a == mean_b ? 1.0 : 0.0;
        return result;
    }
    result.z = (mean_a - mean_b) / denom;
    // p = 2 * (1 - Phi(|z|)) = erfc(|z| / sqrt(2)).
    result.p_value = std::erfc(std::abs(result.z) / std::sqrt(2.0));
    return result;
}

const char* probe_kind_name(ProbeKind kind) {
    switch (kind) {
        case ProbeKind::semantic: return "semantic";
        case ProbeKind::topic: return "topic";
        case ProbeKind::citation: return "citation";
    }
    return "unknown";
}

ProbeReport mean_rank_probe(const ProbeScorer& scorer, const std::vector<ProbeTask>& tasks) {
    std::map<ProbeKind, std::pair<double, int>> sums;
    for (const ProbeTask& task : tasks) {
        if (task.candidates.size() != 100 || task.relevant_index < 0 ||
            task.relevant_index >= static_cast<int>(task.candidates.size())) {
            throw UsageError("mean_rank_probe: task must have exactly 100 candidates and one "
                             "relevant index");
        }
        const double relevant_score = scorer(
            task.query, task.candidates[static_cast<std::size_t>(task.relevant_index)], task.kind);
        int rank = 1;
        for (std::size_t i = 0; i < task.candidates.size(); ++i) {
            if (static_cast<int>(i) == task.relevant_index) {
                continue;
            }
            const double s = scorer(task.query, task.candidates[i], task.kind);
            // Ties resolve by candidate order, mirroring a stable descending sort.
            if (s > relevant_score ||
                (s == relevant_score && static_cast<int>(i) < task.relevant_index)) {
                ++rank;
            }
        }
        auto& [sum, count] = sums[task.kind];
        sum += rank;
        ++count;
    }
    ProbeReport report;
    for (const auto& [kind, agg] : sums) {
        report.mean_rank[kind] = agg.first / agg.second;
        report.n_tasks[kind] = agg.second;
    }
    return report;
}

ProbeReport mean_rank_probe(EmbeddingProvider& provider, const std::vector<ProbeTask>& tasks) {
    const ProbeScorer scorer = [&provider](const std::string& query, const std::string& candidate,
                                           ProbeKind kind) {
        const Factor factor = kind == ProbeKind::semantic ? Factor::semantic
                              : kind == ProbeKind::topic  ? Factor::topic_classification
                                                          : Factor::citation;
        const Embedding q = provider.embed("q:" + query, query, factor);
        const Embedding c = provider.embed("c:" + candidate, candidate, factor);
        return q.dot(c);
    };
    return mean_rank_probe(scorer, tasks);
}

std::vector<ProbeTask> build_probe_tasks(const std::vector<CorpusRecord>& corpus,
                                         const std::vector<CorpusRecord>& queries,
                                         int tasks_per_kind, std::uint64_t seed) {
    if (queries.empty() || corpus.size() < 101) {
        throw UsageError("build_probe_tasks: need at least one query paper and 101 corpus papers");
    }
    std::set<std::string> field_name_set;
    for (const CorpusRecord& r : corpus) {
        for (const FieldTag& f : r.fields) {
            if (f.layer >= 3) {
                field_name_set.insert(f.name);
            }
        }
    }
    const std::vector<std::string> field_names(field_name_set.begin(), field_name_set.end());
    if (field_names.size() < 100) {
        throw UsageError("build_probe_tasks: need at least 100 distinct fine field names, got " +
                         std::to_string(field_names.size()));
    }
    CorpusIndex index(corpus);

    Rng rng(seed);
    std::vector<ProbeTask> tasks;
    int made = 0;
    for (std::size_t qi = 0; qi < queries.size() && made < tasks_per_kind; ++qi, ++made) {
        const CorpusRecord& p = queries[qi];

        // Semantic: title -> own abstract among other papers' abstracts.
        {
            ProbeTask task;
            task.kind = ProbeKind::semantic;
            task.query = p.title;
            std::set<std::size_t> others;
            while (others.size() < 99) {
                const auto c = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(corpus.size()) - 1));
                if (corpus[c].id != p.id && !corpus[c].abstract_text.empty()) {
                    others.insert(c);
                }
            }
            std::vector<std::string> candidates;
            candidates.push_back(p.abstract_text);
            for (const std::size_t c : others) {
                candidates.push_back(corpus[c].abstract_text);
            }
            rng.shuffle(candidates);
            const auto rel = std::find(candidates.begin(), candidates.end(), p.abstract_text);
            task.relevant_index = static_cast<int>(rel - candidates.begin());
            task.candidates = std::move(candidates);
            tasks.push_back(std::move(task));
        }

        // Topic: one of p's fine fields among 99 other field names.
        std::vector<std::string> own_fields;
        for (const FieldTag& f : p.fields) {
            if (f.layer >= 3) {
                own_fields.push_back(f.name);
            }
        }
        if (!own_fields.empty()) {
            ProbeTask task;
            task.kind = ProbeKind::topic;
            task.query = p.text();
            const std::string relevant = own_fields[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(own_fields.size()) - 1))];
            const std::set<std::string> own(own_fields.begin(), own_fields.end());
            std::set<std::string> others;
            while (others.size() < 99) {
                const std::string& name = field_names[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(field_names.size()) - 1))];
                if (own.count(name) == 0) {
                    others.insert(name);
                }
            }
            std::vector<std::string> candidates;
            candidates.push_back(relevant);
            candidates.insert(candidates.end(), others.begin(), others.end());
            rng.shuffle(candidates);
            const auto rel = std::find(candidates.begin(), candidates.end(), relevant);
            task.relevant_index = static_cast<int>(rel - candidates.begin());
            task.candidates = std::move(candidates);
            tasks.push_back(std::move(task));
        }

        // Citation: one cited paper among 99 papers p does not cite.
        std::vector<const CorpusRecord*> cited;
        for (const std::string& ref : p.references) {
            const CorpusRecord* r = index.find(ref);
            if (r != nullptr) {
                cited.push_back(r);
            }
        }
        if (!cited.empty()) {
            ProbeTask task;
            task.kind = ProbeKind::citation;
            task.query = p.text();
            const CorpusRecord* relevant = cited[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(cited.size()) - 1))];
            const std::set<std::string> cited_ids(p.references.begin(), p.references.end());
            std::set<std::size_t> others;
            while (others.size() < 99) {
                const auto c = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(corpus.size()) - 1));
                if (corpus[c].id != p.id && cited_ids.count(corpus[c].id) == 0) {
                    others.insert(c);
                }
            }
            std::vector<std::string> candidates;
            candidates.push_back(relevant->text());
            for (const std::size_t c : others) {
                candidates.push_back(corpus[c].text());
            }
            rng.shuffle(candidates);
            const auto rel = std::find(candidates.begin(), candidates.end(), relevant->text());
            task.relevant_index = static_cast<int>(rel - candidates.begin());
            task.candidates = std::move(candidates);
            tasks.push_back(std::move(task));
        }
    }
    return tasks;
}

void save_probe_report_csv(const std::string& path, const ProbeReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError(path + ": cannot open for writing");
    }
    out << "probe_kind,mean_rank,n_tasks\n";
    for (const auto& [kind, rank] : report.mean_rank) {
        out << probe_kind_name(kind) << ',' << format_double(rank) << ','
            << report.n_tasks.at(kind) << '\n';
    }
    if (!out) {
        throw DataError(path + ": write failed");
    }
}

}  // namespace cof
