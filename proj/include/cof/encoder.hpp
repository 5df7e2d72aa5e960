#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cof/rng.hpp"
#include "cof/tensor.hpp"
#include "cof/tokenizer.hpp"

namespace cof {

// The three relevance factors plus the probe-only classification instruction.
enum class Factor { semantic, topic, citation, topic_classification };

struct FactorInstruction {
    Factor factor;
    std::string text;
};

// Fixed instruction strings selecting a factor.
const FactorInstruction& instruction_for(Factor factor);
const char* factor_name(Factor factor);
std::optional<Factor> factor_from_name(const std::string& name);

struct EncoderConfig {
    int num_layers = 2;    // paper scale is 12; desk-scale default 2
    int hidden_dim = 64;
    int num_heads = 4;
    int ffn_dim = 256;     // 4 * hidden_dim
    int max_instruction_len = 32;
    int max_paper_len = 256;
    int vocab_size = 0;
    bool normalize_embeddings = false;  // optional L2 norm on g(p|phi); default raw dot products

    int head_dim() const { return hidden_dim / num_heads; }
    int max_position() const { return std::max(max_instruction_len, max_paper_len); }
    void validate() const;
};

// One weight set serves the instruction encoder, the paper encoder, and all
// factors. Per-head projections are packed column-wise into d x d matrices;
// head u owns columns [u*head_dim, (u+1)*head_dim).
struct LayerWeights {
    Matrix query_proj;      // d x d
    Matrix key_proj;        // d x d
    Matrix value_proj;      // d x d
    Matrix output_proj;     // d x d
    Matrix attn_norm_gain;  // 1 x d
    Matrix attn_norm_bias;  // 1 x d
    Matrix ffn_in_weight;   // d x ffn
    Matrix ffn_in_bias;     // 1 x ffn
    Matrix ffn_out_weight;  // ffn x d
    Matrix ffn_out_bias;    // 1 x d
    Matrix ffn_norm_gain;   // 1 x d
    Matrix ffn_norm_bias;   // 1 x d
};

struct EncoderWeights {
    Matrix token_embedding;     // vocab x d
    Matrix position_embedding;  // max_position x d
    Matrix segment_embedding;   // 2 x d, row 0 used (inputs are never sentence pairs)
    std::vector<LayerWeights> layers;

    static EncoderWeights init(const EncoderConfig& config, Rng& rng);

    // Visits every parameter as (name, Matrix&) in the checkpoint order.
    template <typename Fn>
    void for_each_parameter(Fn&& fn) {
        fn("token_embedding", token_embedding);
        fn("position_embedding", position_embedding);
        fn("segment_embedding", segment_embedding);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string p = "layer" + std::to_string(l) + ".";
            LayerWeights& lw = layers[l];
            fn(p + "query_proj", lw.query_proj);
            fn(p + "key_proj", lw.key_proj);
            fn(p + "value_proj", lw.value_proj);
            fn(p + "output_proj", lw.output_proj);
            fn(p + "attn_norm_gain", lw.attn_norm_gain);
            fn(p + "attn_norm_bias", lw.attn_norm_bias);
            fn(p + "ffn_in_weight", lw.ffn_in_weight);
            fn(p + "ffn_in_bias", lw.ffn_in_bias);
            fn(p + "ffn_out_weight", lw.ffn_out_weight);
            fn(p + "ffn_out_bias", lw.ffn_out_bias);
            fn(p + "ffn_norm_gain", lw.ffn_norm_gain);
            fn(p + "ffn_norm_bias", lw.ffn_norm_bias);
        }
    }
    template <typename Fn>
    void for_each_parameter(Fn&& fn) const {
        const_cast<EncoderWeights*>(this)->for_each_parameter(
            [&](const std::string& name, Matrix& m) { fn(name, static_cast<const Matrix&>(m)); });
    }
};

constexpr double kLayerNormEps = 1e-5;

// Hidden states H^(0)..H^(L); rows cover the padded sequence length.
struct LayerStates {
    std::vector<Matrix> layers;
    Index attention_length = 0;

    int depth() const { return static_cast<int>(layers.size()) - 1; }
};

// --- public operations (eager path) ---

// h^(0) = token + segment + position embedding per position.
Matrix embed_inputs(const TokenSequence& seq, const EncoderWeights& weights,
                    const EncoderConfig& config);

// Multi-head self-attention over H: the concatenation over heads of
// softmax(Q_u K_u^T / sqrt(d/U)) V_u. The layer's output projection is
// applied by the encoder layer, not here. Keys at positions >= valid_keys
// are masked ([PAD] positions receive -inf pre-softmax); valid_keys < 0
// means all keys are live.
Matrix mha(const Matrix& h, const LayerWeights& lw, int num_heads, Index valid_keys = -1);

// Asymmetric attention: queries from the paper states only, keys/values from
// the concatenation [instruction states ; paper states], shared projections.
// With an empty instruction this degenerates to mha exactly.
Matrix mha_asymmetric(const Matrix& h_paper, const Matrix& h_instr, const LayerWeights& lw,
                      int num_heads, Index valid_paper_keys = -1, Index valid_instr_keys = -1);

// Full self-attention stack for a token sequence; returns H^(0)..H^(L).
LayerStates encode_token_states(const TokenSequence& seq, const EncoderWeights& weights,
                                const EncoderConfig& config);

// States of the fixed instruction text (tokenized against `vocab`). The paper
// never serves as context of the instruction, so these depend only on
// (instruction, weights) and are cached by callers.
LayerStates encode_instruction(const FactorInstruction& instr, const Vocabulary& vocab,
                               const EncoderWeights& weights, const EncoderConfig& config);

// Zero-length instruction states; encode_paper with these reduces exactly to
// the uninstructed stack.
LayerStates empty_instruction_states(const EncoderConfig& config);

// g(p|phi): [CLS] output of the final layer; layer l+1 attends over
// [instruction state l ; paper state l].
Embedding encode_paper(const TokenSequence& paper, const LayerStates& instr_states,
                       const EncoderWeights& weights, const EncoderConfig& config);

// Plain self-attention stack over the paper tokens (No-Instruction ablation).
Embedding encode_paper_uninstructed(const TokenSequence& paper, const EncoderWeights& weights,
                                    const EncoderConfig& config);

// --- checkpoint file ---
// Binary, magic "COFW", version, config fields, then parameters in
// for_each_parameter order as little-endian float32.
void save_checkpoint(const std::string& path, const EncoderConfig& config,
                     const EncoderWeights& weights);
struct Checkpoint {
    EncoderConfig config;
    EncoderWeights weights;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cof
