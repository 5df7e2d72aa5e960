#pragma once

#include <array>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cof/corpus_io.hpp"
#include "cof/matching.hpp"

namespace cof {

// Judgments grouped per paper; enforces the 0-3 range and pair uniqueness.
class JudgmentSet {
public:
    JudgmentSet() = default;
    explicit JudgmentSet(const std::vector<RelevanceJudgment>& judgments);

    const std::map<std::string, std::map<std::string, int>>& by_paper() const {
        return by_paper_;
    }
    // R_p: reviewers with an annotated score for this paper.
    const std::map<std::string, int>* paper_scores(const std::string& paper_id) const;

private:
    std::map<std::string, std::map<std::string, int>> by_paper_;
};

enum class PrecisionMode { soft, hard };

// Eq.-(12)-style P@K for one paper: the ranking is restricted to R_p, the
// top K of it is scanned, and the denominator stays K even when |R_p| < K
// (short_rp, when given, counts those papers). Soft counts score >= 2,
// hard counts score == 3.
double precision_at_k(const std::vector<std::string>& ranked_reviewers,
                      const std::map<std::string, int>& judgments, int k, PrecisionMode mode,
                      int* short_rp = nullptr);

// Alternative definition: sum of the top-K scores over 3K.
double precision_at_k_liu(const std::vector<std::string>& ranked_reviewers,
                          const std::map<std::string, int>& judgments, int k);

// Alternative definition: soft matches over min(K, |R_p|).
double precision_at_k_anjum(const std::vector<std::string>& ranked_reviewers,
                            const std::map<std::string, int>& judgments, int k);

struct MetricReport {
    std::map<std::string, double> values;                      // metric -> [0,1]
    double average = 0.0;                                      // mean of the four primary metrics
    std::map<std::string, std::map<std::string, double>> per_paper;
    int short_rp_papers = 0;  // papers where |R_p| < K for some K
};

// Rankings per paper (full reviewer order); metrics averaged over the papers
// that have judgments. Ks are the reported settings {5, 10}.
MetricReport evaluate_rankings(
    const std::map<std::string, std::vector<std::string>>& ranked_by_paper,
    const JudgmentSet& judgments, const std::vector<int>& ks = {5, 10});

void save_metric_report_csv(const std::string& path, const MetricReport& report);
std::string metric_report_table(const MetricReport& report);

// Jaccard of two aspect sets (0 when both empty) binned into 0..3 by three
// strictly ascending thresholds in (0, 1].
int jaccard_to_rating(const std::set<std::string>& aspects_p,
                      const std::set<std::string>& aspects_r,
                      const std::array<double, 3>& thresholds);

// Mean of the 0-3 ratings, rounded half-up to the nearest integer.
int aggregate_annotations(const std::vector<int>& ratings);

struct ZTestResult {
    double z = 0.0;
    double p_value = 1.0;
};

// Two-tailed Z-test over per-run metric values with sample variances.
// Degenerate zero-variance inputs: p = 1 when the means agree, 0 otherwise.
ZTestResult z_test(const std::vector<double>& runs_a, const std::vector<double>& runs_b);

// --- factor probes ---

enum class ProbeKind { semantic, topic, citation };

const char* probe_kind_name(ProbeKind kind);

struct ProbeTask {
    ProbeKind kind = ProbeKind::semantic;
    std::string query;
    std::vector<std::string> candidates;  // exactly 100
    int relevant_index = -1;              // exactly one relevant candidate
};

struct ProbeReport {
    std::map<ProbeKind, double> mean_rank;
    std::map<ProbeKind, int> n_tasks;
};

using ProbeScorer =
    std::function<double(const std::string& query, const std::string& candidate, ProbeKind kind)>;

// Rank (1-based, ties resolved by candidate order) of the relevant candidate
// under the scorer, averaged per probe kind.
ProbeReport mean_rank_probe(const ProbeScorer& scorer, const std::vector<ProbeTask>& tasks);

// Model-backed scorer: semantic probes use the semantic instruction on both
// sides, topic probes the topic_classification instruction, citation probes
// the citation instruction.
ProbeReport mean_rank_probe(EmbeddingProvider& provider, const std::vector<ProbeTask>& tasks);

// Builds the three 100-candidate probe task families from a corpus:
// title -> abstract retrieval, paper -> field-name tagging, and
// paper -> cited-paper retrieval. Requires at least 100 distinct field names
// and enough candidate papers.
std::vector<ProbeTask> build_probe_tasks(const std::vector<CorpusRecord>& corpus,
                                         const std::vector<CorpusRecord>& queries,
                                         int tasks_per_kind, std::uint64_t seed);

void save_probe_report_csv(const std::string& path, const ProbeReport& report);

}  // namespace cof
