#pragma once

#include <array>
#include <string>

#include "cof/encoder.hpp"
#include "cof/matching.hpp"
#include "cof/pretraining.hpp"
#include "cof/synthetic.hpp"

namespace cof {

// Flat key-value configuration with dotted section names. Every field has a
// documented default; unknown keys are rejected. Environment variables with
// prefix COF_ override file values (train.epochs -> COF_TRAIN_EPOCHS).
struct RunConfig {
    std::uint64_t seed = 17;

    EncoderConfig encoder;            // vocab_size is derived from the vocabulary file
    TrainConfig train;
    ChainConfig chain;
    ProfileFilters filters;
    SyntheticCorpusSpec synth;

    int topic_pairs_per_paper = 10;   // positive-pair cap per anchor
    int vocab_min_freq = 1;
    int vocab_max_size = 50000;
    std::array<double, 3> jaccard_thresholds = {0.2, 0.4, 0.7};
    int probe_tasks_per_kind = 50;

    struct Paths {
        std::string corpus;
        std::string search_log;
        std::string submissions;
        std::string reviewers;
        std::string judgments;
        std::string model;
        std::string vocab;
        std::string out_dir;
    } paths;

    // Applies `key = value` pairs from the file, then COF_* environment
    // overrides. Call sites then layer CLI flags on top.
    void load_file(const std::string& path);
    void apply_environment();
    void set(const std::string& key, const std::string& value);
};

}  // namespace cof
