#pragma once

#include <vector>

#include "cof/autodiff.hpp"
#include "cof/encoder.hpp"

// Generic transformer stack shared by the eager inference path and the
// autodiff training path. Ops supplies the primitive vocabulary; the layer
// arithmetic is written once so the two paths cannot diverge.

namespace cof {

struct EagerOps {
    using V = Matrix;
    V constant(Matrix m) const { return m; }
    V gather_rows(const V& table, const std::vector<int>& ids) const {
        Matrix out(static_cast<Index>(ids.size()), table.cols());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] < 0 || ids[i] >= table.rows()) {
                throw ShapeError("gather_rows: row id " + std::to_string(ids[i]) +
                                 " out of range for " + shape_string(table.rows(), table.cols()));
            }
            out.row(static_cast<Index>(i)) = table.row(ids[i]);
        }
        return out;
    }
    V matmul(const V& a, const V& b) const { return cof::matmul(a, b); }
    V transpose(const V& a) const { return a.transpose(); }
    V add(const V& a, const V& b) const { return a + b; }
    V scale(const V& a, double s) const { return a * s; }
    V add_row_vector(const V& a, const V& r) const { return a.rowwise() + r.row(0); }
    V softmax_rows_masked(const V& a, Index valid) const {
        return cof::softmax_rows_masked(a, valid);
    }
    V layer_norm(const V& x, const V& g, const V& b, double eps) const {
        return cof::layer_norm(x, g, b, eps);
    }
    V gelu(const V& a) const { return cof::gelu(a); }
    V concat_rows(const V& t, const V& b) const {
        Matrix out(t.rows() + b.rows(), t.cols());
        out.topRows(t.rows()) = t;
        out.bottomRows(b.rows()) = b;
        return out;
    }
    V concat_cols(const std::vector<V>& parts) const {
        Index cols = 0;
        for (const V& p : parts) {
            cols += p.cols();
        }
        Matrix out(parts.front().rows(), cols);
        Index at = 0;
        for (const V& p : parts) {
            out.middleCols(at, p.cols()) = p;
            at += p.cols();
        }
        return out;
    }
    V slice_cols(const V& a, Index start, Index count) const { return a.middleCols(start, count); }
    V top_rows(const V& a, Index count) const { return a.topRows(count); }
    V row(const V& a, Index r) const { return a.row(r); }
};

struct TapeOps {
    Tape& tape;
    using V = Value;
    V constant(Matrix m) const { return tape.constant(std::move(m)); }
    V gather_rows(V table, const std::vector<int>& ids) const {
        return tape.gather_rows(table, ids);
    }
    V matmul(V a, V b) const { return tape.matmul(a, b); }
    V transpose(V a) const { return tape.transpose(a); }
    V add(V a, V b) const { return tape.add(a, b); }
    V scale(V a, double s) const { return tape.scale(a, s); }
    V add_row_vector(V a, V r) const { return tape.add_row_vector(a, r); }
    V softmax_rows_masked(V a, Index valid) const { return tape.softmax_rows_masked(a, valid); }
    V layer_norm(V x, V g, V b, double eps) const { return tape.layer_norm(x, g, b, eps); }
    V gelu(V a) const { return tape.gelu(a); }
    V concat_rows(V t, V b) const { return tape.concat_rows(t, b); }
    V concat_cols(const std::vector<V>& parts) const { return tape.concat_cols(parts); }
    V slice_cols(V a, Index start, Index count) const { return tape.slice_cols(a, start, count); }
    V top_rows(V a, Index count) const { return tape.top_rows(a, count); }
    V row(V a, Index r) const { return tape.row(a, r); }
};

template <typename V>
struct LayerWeightsRef {
    V query_proj, key_proj, value_proj, output_proj;
    V attn_norm_gain, attn_norm_bias;
    V ffn_in_weight, ffn_in_bias, ffn_out_weight, ffn_out_bias;
    V ffn_norm_gain, ffn_norm_bias;
};

template <typename V>
struct WeightsRef {
    V token_embedding, position_embedding, segment_embedding;
    std::vector<LayerWeightsRef<V>> layers;
};

// Eager lift: plain matrix copies.
inline WeightsRef<Matrix> lift_weights(EagerOps&, const EncoderWeights& w) {
    WeightsRef<Matrix> ref;
    ref.token_embedding = w.token_embedding;
    ref.position_embedding = w.position_embedding;
    ref.segment_embedding = w.segment_embedding;
    for (const LayerWeights& lw : w.layers) {
        ref.layers.push_back({lw.query_proj, lw.key_proj, lw.value_proj, lw.output_proj,
                              lw.attn_norm_gain, lw.attn_norm_bias, lw.ffn_in_weight,
                              lw.ffn_in_bias, lw.ffn_out_weight, lw.ffn_out_bias,
                              lw.ffn_norm_gain, lw.ffn_norm_bias});
    }
    return ref;
}

// Tape lift: every weight becomes a registered parameter so backward() maps
// gradients by parameter name.
inline WeightsRef<Value> lift_weights(TapeOps& ops, const EncoderWeights& w) {
    WeightsRef<Value> ref;
    ref.layers.resize(w.layers.size());
    std::vector<std::pair<std::string, const Matrix*>> params;
    w.for_each_parameter(
        [&](const std::string& name, const Matrix& m) { params.emplace_back(name, &m); });
    std::size_t i = 0;
    auto next = [&](const char*) {
        const auto& [name, m] = params[i];
        ++i;
        return ops.tape.parameter(name, *m);
    };
    ref.token_embedding = next("token_embedding");
    ref.position_embedding = next("position_embedding");
    ref.segment_embedding = next("segment_embedding");
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        LayerWeightsRef<Value>& lr = ref.layers[l];
        lr.query_proj = next("query_proj");
        lr.key_proj = next("key_proj");
        lr.value_proj = next("value_proj");
        lr.output_proj = next("output_proj");
        lr.attn_norm_gain = next("attn_norm_gain");
        lr.attn_norm_bias = next("attn_norm_bias");
        lr.ffn_in_weight = next("ffn_in_weight");
        lr.ffn_in_bias = next("ffn_in_bias");
        lr.ffn_out_weight = next("ffn_out_weight");
        lr.ffn_out_bias = next("ffn_out_bias");
        lr.ffn_norm_gain = next("ffn_norm_gain");
        lr.ffn_norm_bias = next("ffn_norm_bias");
    }
    return ref;
}

template <typename Ops>
class EncoderStack {
public:
    using V = typename Ops::V;

    EncoderStack(Ops& ops, const EncoderConfig& config, const WeightsRef<V>& weights)
        : ops_(ops), cfg_(config), w_(weights) {}

    // h^(0): token + segment + position rows.
    V embed(const TokenSequence& seq) const {
        const std::vector<int>& ids = seq.ids;
        std::vector<int> positions(ids.size());
        std::vector<int> segments(ids.size(), 0);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            positions[i] = static_cast<int>(i);
        }
        V tok = ops_.gather_rows(w_.token_embedding, ids);
        V pos = ops_.gather_rows(w_.position_embedding, positions);
        V seg = ops_.gather_rows(w_.segment_embedding, segments);
        return ops_.add(ops_.add(tok, pos), seg);
    }

    // One encoder layer. context, when present, is the (already trimmed)
    // instruction state prepended to the keys/values; queries always come
    // from h alone.
    V layer_step(const V& h, Index n_valid, const LayerWeightsRef<V>& lw, const V* context,
                 Index context_rows) const {
        const int heads = cfg_.num_heads;
        const Index dh = cfg_.head_dim();
        const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

        V keys_src = context != nullptr ? ops_.concat_rows(*context, h) : h;
        const Index valid_keys = (context != nullptr ? context_rows : 0) + n_valid;

        V q = ops_.matmul(h, lw.query_proj);
        V k = ops_.matmul(keys_src, lw.key_proj);
        V v = ops_.matmul(keys_src, lw.value_proj);

        std::vector<V> head_outputs;
        head_outputs.reserve(static_cast<std::size_t>(heads));
        for (int u = 0; u < heads; ++u) {
            V qu = ops_.slice_cols(q, u * dh, dh);
            V ku = ops_.slice_cols(k, u * dh, dh);
            V vu = ops_.slice_cols(v, u * dh, dh);
            V scores = ops_.scale(ops_.matmul(qu, ops_.transpose(ku)), inv_sqrt_dh);
            V probs = ops_.softmax_rows_masked(scores, valid_keys);
            head_outputs.push_back(ops_.matmul(probs, vu));
        }
        V attn = ops_.matmul(ops_.concat_cols(head_outputs), lw.output_proj);
        V h_hat = ops_.layer_norm(ops_.add(h, attn), lw.attn_norm_gain, lw.attn_norm_bias,
                                  kLayerNormEps);

        V inner = ops_.gelu(
            ops_.add_row_vector(ops_.matmul(h_hat, lw.ffn_in_weight), lw.ffn_in_bias));
        V ffn = ops_.add_row_vector(ops_.matmul(inner, lw.ffn_out_weight), lw.ffn_out_bias);
        return ops_.layer_norm(ops_.add(h_hat, ffn), lw.ffn_norm_gain, lw.ffn_norm_bias,
                               kLayerNormEps);
    }

    // Self-attention stack; returns H^(0)..H^(L).
    std::vector<V> self_states(const TokenSequence& seq) const {
        std::vector<V> states;
        states.reserve(w_.layers.size() + 1);
        states.push_back(embed(seq));
        for (const auto& lw : w_.layers) {
            states.push_back(layer_step(states.back(), seq.attention_length, lw, nullptr, 0));
        }
        return states;
    }

    // [CLS] row of the final paper layer; instr_states, when present, must
    // hold L+1 states produced with the same weights. instr_valid of the
    // instruction states drives trimming of padded instruction rows.
    V paper_cls(const TokenSequence& paper, const std::vector<V>* instr_states,
                Index instr_valid) const {
        V h = embed(paper);
        for (std::size_t l = 0; l < w_.layers.size(); ++l) {
            if (instr_states != nullptr && instr_valid > 0) {
                V context = ops_.top_rows((*instr_states)[l], instr_valid);
                h = layer_step(h, paper.attention_length, w_.layers[l], &context, instr_valid);
            } else {
                h = layer_step(h, paper.attention_length, w_.layers[l], nullptr, 0);
            }
        }
        return ops_.row(h, 0);
    }

private:
    Ops& ops_;
    const EncoderConfig& cfg_;
    const WeightsRef<V>& w_;
};

}  // namespace cof
