#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cof/corpus_io.hpp"

namespace cof {

// Desk-scale stand-in for the large pre-training corpora: papers as token
// bags drawn from field-specific vocabulary slices, citations biased toward
// shared-field papers, queries derived from titles with click scores, and
// reviewer ground truth discretized from field overlap.
struct SyntheticCorpusSpec {
    int num_fields = 120;          // fine-grained fields (layer >= 3)
    int hierarchy_depth = 5;       // fine fields live at layers 3..depth
    int num_papers = 2000;
    int num_queries = 500;
    double citation_density = 5.0; // mean references per paper
    int vocab_size = 2200;         // content tokens (background + field slices)
    std::uint64_t seed = 17;

    int num_reviewers = 30;
    int num_submissions = 40;
    int year_min = 2013;
    int year_max = 2020;

    void validate() const;
};

struct SyntheticOutput {
    std::vector<CorpusRecord> papers;        // reviewer-profile corpus
    std::vector<CorpusRecord> submissions;   // held-out papers to be matched
    SearchLog search_log;
    std::vector<ReviewerRecord> reviewers;
    std::vector<RelevanceJudgment> judgments;
};

SyntheticOutput generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

// Thresholded rating used both by the generator's ground truth and the
// SIGIR-style aspect discretization: bins a Jaccard value into 0..3 by three
// ascending cut points.
int rating_from_jaccard(double jaccard, const std::array<double, 3>& thresholds);

}  // namespace cof
