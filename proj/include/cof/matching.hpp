#pragma once

#include <array>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cof/corpus_io.hpp"
#include "cof/encoder.hpp"

namespace cof {

// The seven inference variants of the ablation study. CoF is the full chain
// S -> T -> S+T+C.
enum class AblationVariant {
    cof,
    no_instruction,
    s,
    t,
    c,
    s_plus_t_plus_c,
    s_then_t_then_c,
};

constexpr std::array<AblationVariant, 7> kAllVariants = {
    AblationVariant::cof,           AblationVariant::no_instruction,
    AblationVariant::s,             AblationVariant::t,
    AblationVariant::c,             AblationVariant::s_plus_t_plus_c,
    AblationVariant::s_then_t_then_c,
};

const char* variant_name(AblationVariant v);      // e.g. "S->T->C"
const char* variant_file_tag(AblationVariant v);  // e.g. "s_to_t_to_c"
std::optional<AblationVariant> variant_from_name(const std::string& name);

// --- publication profiles ---

enum class AuthorRank { any, first, last, first_or_last };

struct ProfileFilters {
    int years_back = 0;                      // 0 disables the time-span filter
    std::vector<std::string> venues;         // empty disables the venue filter
    AuthorRank author_rank = AuthorRank::any;
};

struct ReviewerProfile {
    std::string reviewer_id;
    std::vector<std::string> paper_ids;  // filtered, ordered by (year desc, id asc)
};

// Conjunction of the active filters. A reviewer whose papers are all filtered
// away keeps an empty profile (scored as -inf, ranked last) rather than
// erroring. With years_back = Y, papers from [reference_year - Y,
// reference_year - 1] survive.
ReviewerProfile build_profile(const ReviewerRecord& reviewer, const CorpusIndex& corpus,
                              const ProfileFilters& filters, int reference_year);

// --- cascade configuration ---

struct ChainConfig {
    // Values in (0, 1] are fractions of the candidate pool, values > 1 are
    // absolute counts. Stage floors keep candidate sets nonempty on small
    // corpora.
    double stage1_keep = 0.01;
    double stage2_keep = 0.5;
    int stage1_min_keep = 10;
    int stage2_min_keep = 5;
    AblationVariant variant = AblationVariant::cof;
};

// Survivor count for a stage: fractions truncate, then the floor and the pool
// size clamp the result (never empty for a nonempty pool).
std::size_t keep_count(double keep, std::size_t pool, int min_keep);

// --- embedding access ---

// Factor-aware embedding source; nullopt factor = the factor-agnostic
// (uninstructed) embedding used by the No-Instruction variant.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual Embedding embed(const std::string& key, const std::string& text,
                            std::optional<Factor> factor) = 0;
};

// Backed by an encoder checkpoint; instruction states are computed once at
// construction, embeddings are cached by (factor, key).
class EncoderEmbeddingProvider final : public EmbeddingProvider {
public:
    EncoderEmbeddingProvider(const EncoderConfig& config, const EncoderWeights& weights,
                             const Vocabulary& vocab);
    Embedding embed(const std::string& key, const std::string& text,
                    std::optional<Factor> factor) override;

private:
    const EncoderConfig& config_;
    const EncoderWeights& weights_;
    const Vocabulary& vocab_;
    std::array<LayerStates, 4> instruction_states_;
    std::map<std::pair<int, std::string>, Embedding> cache_;
};

// --- cascade ---

struct FactorScores {
    double semantic = 0.0;
    double topic = 0.0;
    double citation = 0.0;
};

struct StageResult {
    std::vector<std::string> survivors;  // ordered by (stage score desc, id asc)
    std::unordered_map<std::string, FactorScores> scores;  // accumulated so far
};

struct MatchContext {
    const CorpusIndex& corpus;
    const std::vector<ReviewerProfile>& profiles;
    EmbeddingProvider& provider;
};

// Stage 1: semantic scores over every profile paper; survivors = top
// stage1_keep. An empty profile union yields an empty result.
StageResult stage_semantic(const CorpusRecord& paper, const MatchContext& ctx,
                           const ChainConfig& config);

// Stage 2: topic scores over the survivors only; prunes to stage2_keep.
StageResult stage_topic(const CorpusRecord& paper, const StageResult& prior,
                        const MatchContext& ctx, const ChainConfig& config);

// Stage 3: citation scores over the remaining survivors; no pruning.
StageResult stage_citation(const CorpusRecord& paper, const StageResult& prior,
                           const MatchContext& ctx, const ChainConfig& config);

constexpr double kEmptyProfileScore = -std::numeric_limits<double>::infinity();

struct ReviewerScore {
    std::string reviewer_id;
    double total = 0.0;  // -inf sentinel for reviewers with no surviving papers
    FactorScores factors;
};

// Sums per-paper scores into reviewer scores according to the variant:
// CoF sums all three factors over Q_r intersected with the survivors,
// S->T->C sums the citation factor only, flat variants sum their factor(s)
// over all of Q_r.
std::map<std::string, ReviewerScore> aggregate_reviewer_scores(
    const StageResult& stage3, const std::vector<ReviewerProfile>& profiles,
    AblationVariant variant);

struct RankedReviewer {
    std::string reviewer_id;
    int rank = 0;
    double total = 0.0;
    FactorScores factors;
};

// Full per-submission ranking under the configured variant; descending score,
// ties and -inf sentinels ordered by reviewer id.
std::vector<RankedReviewer> rank_reviewers(const CorpusRecord& paper, const MatchContext& ctx,
                                           const ChainConfig& config);

std::vector<RankingRow> ranking_to_rows(const std::string& paper_id,
                                        const std::vector<RankedReviewer>& ranking,
                                        AblationVariant variant);

// --- TPMS baseline (tf-idf on bag-of-words) ---

struct TpmsStats {
    std::unordered_map<std::string, double> idf;  // ln(N / df), df >= 1
    std::size_t doc_count = 0;
};

TpmsStats build_tpms_stats(const std::vector<std::string>& documents);

// Dot product of tf-idf vectors of the paper text and the concatenation of
// the reviewer's profile texts. Empty profile scores 0.
double tpms_score(const std::string& paper_text, const std::vector<std::string>& profile_texts,
                  const TpmsStats& stats);

// Mean of the k largest scores (all of them when fewer than k); -inf for an
// empty list. k = 3 is the flat PLM-style aggregation.
double aggregate_topk_mean(const std::vector<double>& scores, int k);

}  // namespace cof
