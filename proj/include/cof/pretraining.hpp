#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cof/autodiff.hpp"
#include "cof/corpus_io.hpp"
#include "cof/encoder.hpp"

namespace cof {

struct TrainingSample {
    Factor factor = Factor::semantic;
    std::string anchor_id;
    std::string anchor_text;
    std::string positive_id;
    std::string positive_text;
    std::vector<std::string> negative_ids;
    std::vector<std::string> negative_texts;
};

struct TrainConfig {
    int epochs = 20;
    int batch_size = 32;
    double peak_lr = 3e-4;
    double weight_decay = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int hard_negatives_per_sample = 1;  // T
    std::uint64_t seed = 17;
    // Desk-scale knobs.
    double warmup_fraction = 0.1;       // linear warmup, then linear decay to 0
    double clip_norm = 1.0;             // global gradient-norm clip; <= 0 disables
    int max_samples_per_factor = 0;     // 0 = use every sample
    bool use_instructions = true;       // false = No-Instruction ablation training
    bool in_batch_negatives = true;
};

// J = -log( exp(a.q+) / (exp(a.q+) + sum_t exp(a.q-_t)) ), log-sum-exp
// stabilized. Zero exactly when there are no negatives.
double contrastive_loss(const Embedding& anchor, const Embedding& positive,
                        const std::vector<Embedding>& negatives);

struct SampleBuildReport {
    std::size_t skipped_queries = 0;   // semantic queries with no non-zero doc
    std::size_t total_pairs = 0;
};

// One sample per (query, clicked doc) pair; hard negatives drawn (seeded)
// from zero-score docs in the same result list, up to `hard_negatives`.
std::vector<TrainingSample> build_semantic_samples(const SearchLog& log,
                                                   const CorpusIndex& corpus,
                                                   int hard_negatives, std::uint64_t seed,
                                                   SampleBuildReport* report = nullptr);

// Positive pairs share at least one field at layer >= 3; hard negatives share
// the venue but no fine-grained field. max_pairs_per_paper <= 0 lifts the cap.
std::vector<TrainingSample> build_topic_samples(const std::vector<CorpusRecord>& papers,
                                                int hard_negatives, int max_pairs_per_paper,
                                                std::uint64_t seed);

// Triplets (p, q+, q-) with p -> q+, q+ -> q-, and no edge p -> q-; one
// sample per (p, q+) edge carrying up to `hard_negatives` such q-.
std::vector<TrainingSample> build_citation_samples(const std::vector<CorpusRecord>& papers,
                                                   int hard_negatives, std::uint64_t seed);

// A factor-homogeneous batch with materialized negative id/text lists
// (hard negatives plus, when enabled, the other anchors' positives).
struct BatchEntry {
    std::string anchor_id, anchor_text;
    std::string positive_id, positive_text;
    std::vector<std::string> negative_ids;
    std::vector<std::string> negative_texts;
};

struct Batch {
    Factor factor = Factor::semantic;
    std::vector<BatchEntry> entries;
};

Batch assemble_batch(std::span<const TrainingSample> samples, bool in_batch_negatives);

// --- optimizer ---

struct AdamState {
    std::map<std::string, Matrix> m;
    std::map<std::string, Matrix> v;
};

// Linear warmup over warmup_fraction of total steps, then linear decay to 0.
// step_index is 1-based.
double lr_at_step(double peak_lr, std::int64_t step_index, std::int64_t total_steps,
                  double warmup_fraction);

// Scales gradients in place so their global L2 norm is at most max_norm;
// returns the pre-clip norm.
double clip_global_norm(GradientMap& grads, double max_norm);

// Decoupled AdamW with bias-corrected moments. Throws DataError naming the
// parameter on a non-finite gradient (the step is aborted untouched).
void adamw_step(EncoderWeights& weights, const GradientMap& grads, AdamState& state,
                const TrainConfig& config, double lr, std::int64_t step_index);

// --- training loop ---

struct FactorDatasets {
    std::vector<TrainingSample> semantic;
    std::vector<TrainingSample> topic;
    std::vector<TrainingSample> citation;

    bool empty() const { return semantic.empty() && topic.empty() && citation.empty(); }
};

struct LossRecord {
    int epoch = 0;
    Factor factor = Factor::semantic;
    double mean_loss = 0.0;
};

struct TrainResult {
    EncoderWeights weights;
    std::vector<LossRecord> history;
    std::int64_t steps = 0;
};

// Minimizes the summed contrastive objective with factor-homogeneous batches
// interleaved round-robin. Deterministic for a fixed config seed.
TrainResult train(const TrainConfig& config, const EncoderConfig& encoder_config,
                  const Vocabulary& vocab, const FactorDatasets& datasets);

void save_loss_history_csv(const std::string& path, const std::vector<LossRecord>& history);

}  // namespace cof
