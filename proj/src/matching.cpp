#include "cof/matching.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cof/tokenizer.hpp"

namespace cof {

const char* variant_name(AblationVariant v) {
    switch (v) {
        case AblationVariant::cof: return "CoF";
        case AblationVariant::no_instruction: return "NoInstruction";
        case AblationVariant::s: return "S";
        case AblationVariant::t: return "T";
        case AblationVariant::c: return "C";
        case AblationVariant::s_plus_t_plus_c: return "S+T+C";
        case AblationVariant::s_then_t_then_c: return "S->T->C";
    }
    return "unknown";
}

const char* variant_file_tag(AblationVariant v) {
    switch (v) {
        case AblationVariant::cof: return "cof";
        case AblationVariant::no_instruction: return "no_instruction";
        case AblationVariant::s: return "s";
        case AblationVariant::t: return "t";
        case AblationVariant::c: return "c";
        case AblationVariant::s_plus_t_plus_c: return "s_plus_t_plus_c";
        case AblationVariant::s_then_t_then_c: return "s_to_t_to_c";
    }
    return "unknown";
}

std::optional<AblationVariant> variant_from_name(const std::string& name) {
    std::string lower;
    for (const char c : name) {
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    for (const AblationVariant v : kAllVariants) {
        std::string canon = variant_name(v);
        for (char& c : canon) {
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        if (lower == canon || lower == variant_file_tag(v)) {
            return v;
        }
    }
    if (lower == "no-instruction" || lower == "noinstr") {
        return AblationVariant::no_instruction;
    }
    return std::nullopt;
}

ReviewerProfile build_profile(const ReviewerRecord& reviewer, const CorpusIndex& corpus,
                              const ProfileFilters& filters, int reference_year) {
    ReviewerProfile profile;
    profile.reviewer_id = reviewer.reviewer_id;

    std::set<std::string> seen;
    std::vector<const CorpusRecord*> kept;
    for (const std::string& pid : reviewer.paper_ids) {
        if (!seen.insert(pid).second) {
            continue;
        }
        const CorpusRecord& rec = corpus.at(pid);
        if (filters.years_back > 0) {
            if (rec.year == 0 || rec.year >= reference_year ||
                rec.year < reference_year - filters.years_back) {
                continue;
            }
        }
        if (!filters.venues.empty() &&
            std::find(filters.venues.begin(), filters.venues.end(), rec.venue) ==
                filters.venues.end()) {
            continue;
        }
        if (filters.author_rank != AuthorRank::any) {
            const bool is_first = !rec.authors.empty() && rec.authors.front() == reviewer.reviewer_id;
            const bool is_last = !rec.authors.empty() && rec.authors.back() == reviewer.reviewer_id;
            const bool ok = filters.author_rank == AuthorRank::first  ? is_first
                            : filters.author_rank == AuthorRank::last ? is_last
                                                                      : (is_first || is_last);
            if (!ok) {
                continue;
            }
        }
        kept.push_back(&rec);
    }
    std::sort(kept.begin(), kept.end(), [](const CorpusRecord* a, const CorpusRecord* b) {
        if (a->year != b->year) {
            return a->year > b->year;
        }
        return a->id < b->id;
    });
    for (const CorpusRecord* rec : kept) {
        profile.paper_ids.push_back(rec->id);
    }
    return profile;
}

std::size_t keep_count(double keep, std::size_t pool, int min_keep) {
    if (pool == 0) {
        return 0;
    }
    if (keep <= 0.0) {
        throw UsageError("chain config: keep values must be positive");
    }
    std::size_t count;
    if (keep <= 1.0) {
        count = static_cast<std::size_t>(std::floor(keep * static_cast<double>(pool) + 1e-9));
    } else {
        count = static_cast<std::size_t>(std::llround(keep));
    }
    count = std::max<std::size_t>(count, 1);
    if (min_keep > 0) {
        count = std::max<std::size_t>(count, static_cast<std::size_t>(min_keep));
    }
    return std::min(count, pool);
}

EncoderEmbeddingProvider::EncoderEmbeddingProvider(const EncoderConfig& config,
                                                   const EncoderWeights& weights,
                                                   const Vocabulary& vocab)
    : config_(config), weights_(weights), vocab_(vocab) {
    for (const Factor f : {Factor::semantic, Factor::topic, Factor::citation,
                           Factor::topic_classification}) {
        instruction_states_[static_cast<std::size_t>(f)] =
            encode_instruction(instruction_for(f), vocab_, weights_, config_);
    }
}

Embedding EncoderEmbeddingProvider::embed(const std::string& key, const std::string& text,
                                          std::optional<Factor> factor) {
    const int tag = factor.has_value() ? static_cast<int>(*factor) : -1;
    const auto cache_key = std::make_pair(tag, key);
    const auto it = cache_.find(cache_key);
    if (it != cache_.end()) {
        return it->second;
    }
    const TokenSequence seq = encode(text, vocab_, config_.max_paper_len).trimmed();
    const Embedding e =
        factor.has_value()
            ? encode_paper(seq, instruction_states_[static_cast<std::size_t>(*factor)],
                           weights_, config_)
            : encode_paper_uninstructed(seq, weights_, config_);
    cache_.emplace(cache_key, e);
    return e;
}

namespace {

// Which embedding each stage uses and which factors enter the final sum.
struct VariantPlan {
    bool cascade = true;
    std::optional<Factor> stage1 = Factor::semantic;
    std::optional<Factor> stage2 = Factor::topic;
    std::optional<Factor> stage3 = Factor::citation;
    bool sum_semantic = true;
    bool sum_topic = true;
    bool sum_citation = true;
};

VariantPlan plan_for(AblationVariant v) {
    VariantPlan p;
    switch (v) {
        case AblationVariant::cof:
            break;
        case AblationVariant::no_instruction:
            p.stage1 = p.stage2 = p.stage3 = std::nullopt;  // factor-agnostic everywhere
            break;
        case AblationVariant::s_then_t_then_c:
            p.sum_semantic = p.sum_topic = false;
            break;
        case AblationVariant::s:
            p.cascade = false;
            p.sum_topic = p.sum_citation = false;
            break;
        case AblationVariant::t:
            p.cascade = false;
            p.sum_semantic = p.sum_citation = false;
            break;
        case AblationVariant::c:
            p.cascade = false;
            p.sum_semantic = p.sum_topic = false;
            break;
        case AblationVariant::s_plus_t_plus_c:
            p.cascade = false;
            break;
    }
    return p;
}

std::vector<std::string> profile_union(const std::vector<ReviewerProfile>& profiles) {
    std::set<std::string> ids;
    for (const ReviewerProfile& p : profiles) {
        ids.insert(p.paper_ids.begin(), p.paper_ids.end());
    }
    return {ids.begin(), ids.end()};
}

// Top `count` ids by (score desc, id asc).
std::vector<std::string> select_top(const std::vector<std::pair<std::string, double>>& scored,
                                    std::size_t count) {
    std::vector<std::pair<std::string, double>> sorted = scored;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    std::vector<std::string> out;
    out.reserve(std::min(count, sorted.size()));
    for (std::size_t i = 0; i < sorted.size() && i < count; ++i) {
        out.push_back(sorted[i].first);
    }
    return out;
}

double score_pair(EmbeddingProvider& provider, const CorpusRecord& paper,
                  const CorpusRecord& candidate, std::optional<Factor> factor) {
    const Embedding a = provider.embed(paper.id, paper.text(), factor);
    const Embedding b = provider.embed(candidate.id, candidate.text(), factor);
    return a.dot(b);
}

}  // namespace

StageResult stage_semantic(const CorpusRecord& paper, const MatchContext& ctx,
                           const ChainConfig& config) {
    const VariantPlan plan = plan_for(config.variant);
    StageResult result;
    const std::vector<std::string> pool = profile_union(ctx.profiles);
    if (pool.empty()) {
        return result;  // empty result; callers rank every reviewer by the sentinel
    }
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(pool.size());
    for (const std::string& qid : pool) {
        const double s = score_pair(ctx.provider, paper, ctx.corpus.at(qid), plan.stage1);
        result.scores[qid].semantic = s;
        scored.emplace_back(qid, s);
    }
    result.survivors =
        select_top(scored, keep_count(config.stage1_keep, pool.size(), config.stage1_min_keep));
    return result;
}

StageResult stage_topic(const CorpusRecord& paper, const StageResult& prior,
                        const MatchContext& ctx, const ChainConfig& config) {
    if (prior.survivors.empty()) {
        throw UsageError("stage_topic: prior stage is empty");
    }
    const VariantPlan plan = plan_for(config.variant);
    StageResult result;
    result.scores = prior.scores;
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(prior.survivors.size());
    for (const std::string& qid : prior.survivors) {
        const double s = score_pair(ctx.provider, paper, ctx.corpus.at(qid), plan.stage2);
        result.scores[qid].topic = s;
        scored.emplace_back(qid, s);
    }
    result.survivors = select_top(
        scored, keep_count(config.stage2_keep, prior.survivors.size(), config.stage2_min_keep));
    return result;
}

StageResult stage_citation(const CorpusRecord& paper, const StageResult& prior,
                           const MatchContext& ctx, const ChainConfig& config) {
    if (prior.survivors.empty()) {
        throw UsageError("stage_citation: prior stage is empty");
    }
    const VariantPlan plan = plan_for(config.variant);
    StageResult result;
    result.scores = prior.scores;
    result.survivors = prior.survivors;  // no pruning at this stage
    for (const std::string& qid : result.survivors) {
        result.scores[qid].citation =
            score_pair(ctx.provider, paper, ctx.corpus.at(qid), plan.stage3);
    }
    return result;
}

std::map<std::string, ReviewerScore> aggregate_reviewer_scores(
    const StageResult& stage3, const std::vector<ReviewerProfile>& profiles,
    AblationVariant variant) {
    const VariantPlan plan = plan_for(variant);
    const std::set<std::string> survivors(stage3.survivors.begin(), stage3.survivors.end());

    std::map<std::string, ReviewerScore> out;
    for (const ReviewerProfile& profile : profiles) {
        ReviewerScore score;
        score.reviewer_id = profile.reviewer_id;
        bool any = false;
        for (const std::string& qid : profile.paper_ids) {
            if (survivors.count(qid) == 0) {
                continue;
            }
            const FactorScores& fs = stage3.scores.at(qid);
            score.factors.semantic += fs.semantic;
            score.factors.topic += fs.topic;
            score.factors.citation += fs.citation;
            any = true;
        }
        if (!any) {
            score.total = kEmptyProfileScore;  // ranked after every finite score
        } else {
            score.total = (plan.sum_semantic ? score.factors.semantic : 0.0) +
                          (plan.sum_topic ? score.factors.topic : 0.0) +
                          (plan.sum_citation ? score.factors.citation : 0.0);
        }
        out.emplace(profile.reviewer_id, std::move(score));
    }
    return out;
}

std::vector<RankedReviewer> rank_reviewers(const CorpusRecord& paper, const MatchContext& ctx,
                                           const ChainConfig& config) {
    const VariantPlan plan = plan_for(config.variant);

    StageResult final_stage;
    if (plan.cascade) {
        StageResult s1 = stage_semantic(paper, ctx, config);
        if (!s1.survivors.empty()) {
            StageResult s2 = stage_topic(paper, s1, ctx, config);
            final_stage = stage_citation(paper, s2, ctx, config);
        }
    } else {
        // Flat variants score the needed factor(s) over the whole pool.
        final_stage.survivors = profile_union(ctx.profiles);
        for (const std::string& qid : final_stage.survivors) {
            const CorpusRecord& cand = ctx.corpus.at(qid);
            FactorScores& fs = final_stage.scores[qid];
            if (plan.sum_semantic) {
                fs.semantic = score_pair(ctx.provider, paper, cand, plan.stage1);
            }
            if (plan.sum_topic) {
                fs.topic = score_pair(ctx.provider, paper, cand, plan.stage2);
            }
            if (plan.sum_citation) {
                fs.citation = score_pair(ctx.provider, paper, cand, plan.stage3);
            }
        }
    }

    const std::map<std::string, ReviewerScore> scores =
        aggregate_reviewer_scores(final_stage, ctx.profiles, config.variant);

    std::vector<const ReviewerScore*> order;
    order.reserve(scores.size());
    for (const auto& [id, s] : scores) {
        (void)id;
        order.push_back(&s);
    }
    std::sort(order.begin(), order.end(), [](const ReviewerScore* a, const ReviewerScore* b) {
        if (a->total != b->total) {
            return a->total > b->total;
        }
        return a->reviewer_id < b->reviewer_id;
    });

    std::vector<RankedReviewer> ranking;
    ranking.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        RankedReviewer r;
        r.reviewer_id = order[i]->reviewer_id;
        r.rank = static_cast<int>(i) + 1;
        r.total = order[i]->total;
        r.factors = order[i]->factors;
        ranking.push_back(std::move(r));
    }
    return ranking;
}

std::vector<RankingRow> ranking_to_rows(const std::string& paper_id,
                                        const std::vector<RankedReviewer>& ranking,
                                        AblationVariant variant) {
    std::vector<RankingRow> rows;
    rows.reserve(ranking.size());
    for (const RankedReviewer& r : ranking) {
        RankingRow row;
        row.paper_id = paper_id;
        row.reviewer_id = r.reviewer_id;
        row.rank = r.rank;
        row.f_total = r.total;
        row.f_semantic = r.factors.semantic;
        row.f_topic = r.factors.topic;
        row.f_citation = r.factors.citation;
        row.variant = variant_name(variant);
        rows.push_back(std::move(row));
    }
    return rows;
}

TpmsStats build_tpms_stats(const std::vector<std::string>& documents) {
    TpmsStats stats;
    stats.doc_count = documents.size();
    std::unordered_map<std::string, std::size_t> df;
    for (const std::string& doc : documents) {
        std::set<std::string> seen;
        for (const std::string& tok : tokenize_words(doc)) {
            seen.insert(tok);
        }
        for (const std::string& tok : seen) {
            ++df[tok];
        }
    }
    for (const auto& [tok, count] : df) {
        stats.idf[tok] = std::log(static_cast<double>(std::max<std::size_t>(stats.doc_count, 1)) /
                                  static_cast<double>(std::max<std::size_t>(count, 1)));
    }
    return stats;
}

namespace {

std::unordered_map<std::string, double> tf_counts(const std::string& text) {
    std::unordered_map<std::string, double> tf;
    for (const std::string& tok : tokenize_words(text)) {
        tf[tok] += 1.0;
    }
    return tf;
}

}  // namespace

double tpms_score(const std::string& paper_text, const std::vector<std::string>& profile_texts,
                  const TpmsStats& stats) {
    if (profile_texts.empty()) {
        return 0.0;
    }
    std::string reviewer_text;
    for (const std::string& t : profile_texts) {
        reviewer_text += t;
        reviewer_text += ' ';
    }
    const auto tf_p = tf_counts(paper_text);
    const auto tf_r = tf_counts(reviewer_text);
    double score = 0.0;
    for (const auto& [tok, fp] : tf_p) {
        const auto rit = tf_r.find(tok);
        if (rit == tf_r.end()) {
            continue;
        }
        const auto iit = stats.idf.find(tok);
        // Tokens absent from the stats corpus get df = 1.
        const double idf = iit != stats.idf.end()
                               ? iit->second
                               : std::log(static_cast<double>(
                                     std::max<std::size_t>(stats.doc_count, 1)));
        score += fp * idf * rit->second * idf;
    }
    return score;
}

double aggregate_topk_mean(const std::vector<double>& scores, int k) {
    if (k < 1) {
        throw UsageError("aggregate_topk_mean: k must be >= 1");
    }
    if (scores.empty()) {
        return kEmptyProfileScore;
    }
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), sorted.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += sorted[i];
    }
    return sum / static_cast<double>(n);
}

}  // namespace cof
