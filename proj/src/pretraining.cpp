#include "cof/pretraining.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "cof/encoder_stack.hpp"
#include "cof/rng.hpp"

namespace cof {

double contrastive_loss(const Embedding& anchor, const Embedding& positive,
                        const std::vector<Embedding>& negatives) {
    const double pos_score = anchor.dot(positive);
    double mx = pos_score;
    std::vector<double> scores;
    scores.reserve(negatives.size() + 1);
    scores.push_back(pos_score);
    for (const Embedding& q : negatives) {
        if (q.size() != anchor.size()) {
            throw ShapeError("contrastive_loss: embedding dims disagree");
        }
        scores.push_back(anchor.dot(q));
        mx = std::max(mx, scores.back());
    }
    double z = 0.0;
    for (const double s : scores) {
        z += std::exp(s - mx);
    }
    return std::log(z) + mx - pos_score;
}

std::vector<TrainingSample> build_semantic_samples(const SearchLog& log,
                                                   const CorpusIndex& corpus,
                                                   int hard_negatives, std::uint64_t seed,
                                                   SampleBuildReport* report) {
    Rng rng(seed);
    std::vector<TrainingSample> samples;
    for (const SearchQuery& q : log.queries) {
        std::vector<const SearchResult*> clicked;
        std::vector<const SearchResult*> zero;
        for (const SearchResult& r : q.results) {
            (r.score > 0 ? clicked : zero).push_back(&r);
        }
        if (clicked.empty()) {
            if (report != nullptr) {
                ++report->skipped_queries;
            }
            continue;
        }
        for (const SearchResult* pos : clicked) {
            TrainingSample s;
            s.factor = Factor::semantic;
            s.anchor_id = q.query_id;
            s.anchor_text = q.text;
            s.positive_id = pos->paper_id;
            s.positive_text = corpus.at(pos->paper_id).text();
            const std::size_t want = hard_negatives < 0 ? zero.size()
                                                        : static_cast<std::size_t>(hard_negatives);
            for (const std::size_t zi : rng.sample_indices(zero.size(), want)) {
                s.negative_ids.push_back(zero[zi]->paper_id);
                s.negative_texts.push_back(corpus.at(zero[zi]->paper_id).text());
            }
            samples.push_back(std::move(s));
            if (report != nullptr) {
                ++report->total_pairs;
            }
        }
    }
    return samples;
}

std::vector<TrainingSample> build_topic_samples(const std::vector<CorpusRecord>& papers,
                                                int hard_negatives, int max_pairs_per_paper,
                                                std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainingSample> samples;
    for (std::size_t i = 0; i < papers.size(); ++i) {
        const CorpusRecord& anchor = papers[i];
        if (!anchor.has_fine_field()) {
            continue;
        }
        // Partners with a shared fine field, anchored at the earlier paper so
        // each unordered pair is emitted once.
        std::vector<std::size_t> partners;
        std::vector<std::size_t> hard_pool;
        for (std::size_t j = 0; j < papers.size(); ++j) {
            if (j == i) {
                continue;
            }
            if (j > i && anchor.shares_fine_field(papers[j])) {
                partners.push_back(j);
            } else if (!anchor.shares_fine_field(papers[j]) && papers[j].venue == anchor.venue) {
                hard_pool.push_back(j);
            }
        }
        if (max_pairs_per_paper > 0 &&
            partners.size() > static_cast<std::size_t>(max_pairs_per_paper)) {
            std::vector<std::size_t> chosen;
            for (const std::size_t k :
                 rng.sample_indices(partners.size(),
                                    static_cast<std::size_t>(max_pairs_per_paper))) {
                chosen.push_back(partners[k]);
            }
            std::sort(chosen.begin(), chosen.end());
            partners = std::move(chosen);
        }
        for (const std::size_t j : partners) {
            TrainingSample s;
            s.factor = Factor::topic;
            s.anchor_id = anchor.id;
            s.anchor_text = anchor.text();
            s.positive_id = papers[j].id;
            s.positive_text = papers[j].text();
            const std::size_t want = hard_negatives < 0
                                         ? hard_pool.size()
                                         : static_cast<std::size_t>(hard_negatives);
            for (const std::size_t k : rng.sample_indices(hard_pool.size(), want)) {
                s.negative_ids.push_back(papers[hard_pool[k]].id);
                s.negative_texts.push_back(papers[hard_pool[k]].text());
            }
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

std::vector<TrainingSample> build_citation_samples(const std::vector<CorpusRecord>& papers,
                                                   int hard_negatives, std::uint64_t seed) {
    Rng rng(seed);
    CorpusIndex index(papers);
    std::vector<TrainingSample> samples;
    for (const CorpusRecord& p : papers) {
        std::unordered_map<std::string, bool> cited_by_p;
        for (const std::string& ref : p.references) {
            cited_by_p[ref] = true;
        }
        for (const std::string& pos_id : p.references) {
            const CorpusRecord* pos = index.find(pos_id);
            if (pos == nullptr) {
                continue;  // external reference, no text available
            }
            // q- cited by q+ but not by p (and not p itself).
            std::vector<const CorpusRecord*> pool;
            for (const std::string& neg_id : pos->references) {
                if (neg_id == p.id || cited_by_p.count(neg_id) > 0) {
                    continue;
                }
                const CorpusRecord* neg = index.find(neg_id);
                if (neg != nullptr) {
                    pool.push_back(neg);
                }
            }
            if (pool.empty()) {
                continue;
            }
            TrainingSample s;
            s.factor = Factor::citation;
            s.anchor_id = p.id;
            s.anchor_text = p.text();
            s.positive_id = pos->id;
            s.positive_text = pos->text();
            const std::size_t want = hard_negatives < 0 ? pool.size()
                                                        : static_cast<std::size_t>(hard_negatives);
            for (const std::size_t k : rng.sample_indices(pool.size(), want)) {
                s.negative_ids.push_back(pool[k]->id);
                s.negative_texts.push_back(pool[k]->text());
            }
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

Batch assemble_batch(std::span<const TrainingSample> samples, bool in_batch_negatives) {
    if (samples.empty()) {
        throw UsageError("assemble_batch: empty batch");
    }
    Batch batch;
    batch.factor = samples[0].factor;
    for (const TrainingSample& s : samples) {
        if (s.factor != batch.factor) {
            throw UsageError("assemble_batch: mixed factors in one batch");
        }
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        BatchEntry e;
        e.anchor_id = samples[i].anchor_id;
        e.anchor_text = samples[i].anchor_text;
        e.positive_id = samples[i].positive_id;
        e.positive_text = samples[i].positive_text;
        e.negative_ids = samples[i].negative_ids;
        e.negative_texts = samples[i].negative_texts;
        if (in_batch_negatives) {
            for (std::size_t j = 0; j < samples.size(); ++j) {
                if (j == i) {
                    continue;
                }
                e.negative_ids.push_back(samples[j].positive_id);
                e.negative_texts.push_back(samples[j].positive_text);
            }
        }
        batch.entries.push_back(std::move(e));
    }
    return batch;
}

double lr_at_step(double peak_lr, std::int64_t step_index, std::int64_t total_steps,
                  double warmup_fraction) {
    if (total_steps <= 0 || step_index < 1) {
        throw UsageError("lr_at_step: bad step bookkeeping");
    }
    const auto warmup = static_cast<std::int64_t>(
        std::llround(warmup_fraction * static_cast<double>(total_steps)));
    if (warmup > 0 && step_index <= warmup) {
        return peak_lr * static_cast<double>(step_index) / static_cast<double>(warmup);
    }
    if (total_steps == warmup) {
        return peak_lr;
    }
    const double remaining = static_cast<double>(total_steps - step_index);
    return peak_lr * std::max(remaining, 0.0) / static_cast<double>(total_steps - warmup);
}

double clip_global_norm(GradientMap& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) {
        (void)name;
        sq += g.squaredNorm();
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto& [name, g] : grads) {
            (void)name;
            g *= scale;
        }
    }
    return norm;
}

void adamw_step(EncoderWeights& weights, const GradientMap& grads, AdamState& state,
                const TrainConfig& config, double lr, std::int64_t step_index) {
    if (step_index < 1) {
        throw UsageError("adamw_step: step_index is 1-based");
    }
    // Validate everything before mutating anything so the step aborts whole.
    weights.for_each_parameter([&](const std::string& name, Matrix& w) {
        const auto it = grads.find(name);
        if (it == grads.end()) {
            throw UsageError("adamw_step: missing gradient for parameter '" + name + "'");
        }
        if (it->second.rows() != w.rows() || it->second.cols() != w.cols()) {
            throw ShapeError("adamw_step: gradient shape mismatch for '" + name + "'");
        }
        if (!all_finite(it->second)) {
            throw DataError("adamw_step: non-finite gradient for parameter '" + name + "'");
        }
    });

    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step_index));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step_index));

    weights.for_each_parameter([&](const std::string& name, Matrix& w) {
        const Matrix& g = grads.at(name);
        auto mit = state.m.find(name);
        if (mit == state.m.end()) {
            mit = state.m.emplace(name, Matrix::Zero(w.rows(), w.cols())).first;
            state.v.emplace(name, Matrix::Zero(w.rows(), w.cols()));
        }
        Matrix& m = mit->second;
        Matrix& v = state.v.at(name);
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        const Matrix m_hat = m / bias1;
        const Matrix v_hat = v / bias2;
        // Decoupled weight decay: applied to the weights, not the gradients.
        w -= lr * (m_hat.array() / (v_hat.array().sqrt() + config.adam_eps)).matrix();
        w -= lr * config.weight_decay * w;
    });
}

namespace {

// Per-run cache of tokenized (trimmed) sequences keyed by text.
class TokenCache {
public:
    TokenCache(const Vocabulary& vocab, int max_len) : vocab_(vocab), max_len_(max_len) {}

    const TokenSequence& get(const std::string& text) {
        const auto it = cache_.find(text);
        if (it != cache_.end()) {
            return it->second;
        }
        return cache_.emplace(text, encode(text, vocab_, max_len_).trimmed()).first->second;
    }

private:
    const Vocabulary& vocab_;
    int max_len_;
    std::unordered_map<std::string, TokenSequence> cache_;
};

std::vector<TrainingSample> subsample(std::vector<TrainingSample> samples, int cap, Rng& rng) {
    if (cap > 0 && samples.size() > static_cast<std::size_t>(cap)) {
        rng.shuffle(samples);
        samples.resize(static_cast<std::size_t>(cap));
    }
    return samples;
}

}  // namespace

TrainResult train(const TrainConfig& config, const EncoderConfig& encoder_config,
                  const Vocabulary& vocab, const FactorDatasets& datasets) {
    if (datasets.empty()) {
        throw UsageError("train: all factor datasets are empty");
    }
    encoder_config.validate();
    if (encoder_config.vocab_size != vocab.size()) {
        throw UsageError("train: encoder config vocab_size disagrees with the vocabulary");
    }

    Rng root(config.seed);
    Rng init_rng = root.fork(0);
    Rng order_rng = root.fork(1);
    Rng sub_rng = root.fork(2);

    struct FactorData {
        Factor factor;
        std::vector<TrainingSample> samples;
    };
    std::vector<FactorData> factors;
    if (!datasets.semantic.empty()) {
        factors.push_back({Factor::semantic, subsample(datasets.semantic,
                                                       config.max_samples_per_factor, sub_rng)});
    }
    if (!datasets.topic.empty()) {
        factors.push_back(
            {Factor::topic, subsample(datasets.topic, config.max_samples_per_factor, sub_rng)});
    }
    if (!datasets.citation.empty()) {
        factors.push_back({Factor::citation, subsample(datasets.citation,
                                                       config.max_samples_per_factor, sub_rng)});
    }

    TrainResult result;
    result.weights = EncoderWeights::init(encoder_config, init_rng);

    std::int64_t batches_per_epoch = 0;
    for (const FactorData& f : factors) {
        batches_per_epoch += static_cast<std::int64_t>(
            (f.samples.size() + static_cast<std::size_t>(config.batch_size) - 1) /
            static_cast<std::size_t>(config.batch_size));
    }
    const std::int64_t total_steps = batches_per_epoch * config.epochs;

    TokenCache paper_tokens(vocab, encoder_config.max_paper_len);
    AdamState opt_state;
    std::int64_t step = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        // Factor-homogeneous batches, interleaved round-robin.
        struct PendingBatch {
            Factor factor;
            std::span<const TrainingSample> samples;
        };
        std::vector<std::vector<PendingBatch>> per_factor;
        for (FactorData& f : factors) {
            order_rng.shuffle(f.samples);
            std::vector<PendingBatch> batches;
            for (std::size_t at = 0; at < f.samples.size();
                 at += static_cast<std::size_t>(config.batch_size)) {
                const std::size_t n =
                    std::min(static_cast<std::size_t>(config.batch_size), f.samples.size() - at);
                batches.push_back({f.factor, std::span(f.samples).subspan(at, n)});
            }
            per_factor.push_back(std::move(batches));
        }
        std::vector<PendingBatch> schedule;
        for (std::size_t round = 0;; ++round) {
            bool any = false;
            for (const auto& batches : per_factor) {
                if (round < batches.size()) {
                    schedule.push_back(batches[round]);
                    any = true;
                }
            }
            if (!any) {
                break;
            }
        }

        std::map<Factor, std::pair<double, std::size_t>> epoch_loss;
        for (const PendingBatch& pending : schedule) {
            const Batch batch = assemble_batch(pending.samples, config.in_batch_negatives);

            Tape tape;
            TapeOps ops{tape};
            const WeightsRef<Value> wref = lift_weights(ops, result.weights);
            const EncoderStack<TapeOps> stack(ops, encoder_config, wref);

            std::vector<Value> instr_states;
            Index instr_valid = 0;
            if (config.use_instructions) {
                const TokenSequence instr_seq =
                    encode(instruction_for(batch.factor).text, vocab,
                           encoder_config.max_instruction_len)
                        .trimmed();
                instr_states = stack.self_states(instr_seq);
                instr_valid = instr_seq.attention_length;
            }
            auto embed_text = [&](const std::string& text, auto& memo) -> Value {
                const auto it = memo.find(text);
                if (it != memo.end()) {
                    return it->second;
                }
                const TokenSequence& seq = paper_tokens.get(text);
                const Value cls = config.use_instructions
                                      ? stack.paper_cls(seq, &instr_states, instr_valid)
                                      : stack.paper_cls(seq, nullptr, 0);
                memo.emplace(text, cls);
                return cls;
            };

            std::unordered_map<std::string, Value> memo;
            std::vector<Value> losses;
            losses.reserve(batch.entries.size());
            for (const BatchEntry& e : batch.entries) {
                const Value anchor = embed_text(e.anchor_text, memo);
                const Value positive = embed_text(e.positive_text, memo);
                std::vector<Value> negatives;
                negatives.reserve(e.negative_texts.size());
                for (const std::string& neg : e.negative_texts) {
                    negatives.push_back(embed_text(neg, memo));
                }
                losses.push_back(tape.contrastive_loss(anchor, positive, negatives));
            }
            const Value loss = tape.mean(losses);

            GradientMap grads = tape.backward(loss);
            clip_global_norm(grads, config.clip_norm);
            ++step;
            const double lr =
                lr_at_step(config.peak_lr, step, total_steps, config.warmup_fraction);
            adamw_step(result.weights, grads, opt_state, config, lr, step);

            auto& [sum, count] = epoch_loss[batch.factor];
            for (const Value l : losses) {
                sum += tape.scalar(l);
            }
            count += losses.size();
        }

        for (const auto& [factor, agg] : epoch_loss) {
            result.history.push_back(
                {epoch, factor, agg.first / static_cast<double>(agg.second)});
        }
    }
    result.steps = step;
    return result;
}

void save_loss_history_csv(const std::string& path, const std::vector<LossRecord>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError(path + ": cannot open for writing");
    }
    out << "epoch,factor,mean_loss\n";
    for (const LossRecord& r : history) {
        out << r.epoch << ',' << factor_name(r.factor) << ',' << format_double(r.mean_loss)
            << '\n';
    }
    if (!out) {
        throw DataError(path + ": write failed");
    }
}

}  // namespace cof
