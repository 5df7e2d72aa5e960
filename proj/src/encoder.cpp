#include "cof/encoder.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "cof/encoder_stack.hpp"

namespace cof {

namespace {

const std::array<FactorInstruction, 4> kInstructions = {{
    {Factor::semantic, "Retrieve a scientific paper that is relevant to the query."},
    {Factor::topic,
     "Find a pair of papers that one paper shares similar scientific topic classes with the "
     "other paper."},
    {Factor::citation, "Retrieve a scientific paper that is cited by the query."},
    {Factor::topic_classification,
     "Tag a scientific paper with relevant scientific topic classes."},
}};

Matrix normal_matrix(Index rows, Index cols, double stddev, Rng& rng) {
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            m(r, c) = rng.normal(0.0, stddev);
        }
    }
    return m;
}

void check_sequence(const TokenSequence& seq, const EncoderConfig& config, int limit) {
    if (seq.ids.empty() || seq.attention_length < 2 ||
        seq.attention_length > static_cast<int>(seq.ids.size())) {
        throw UsageError("encoder: malformed token sequence");
    }
    if (static_cast<int>(seq.ids.size()) > limit) {
        throw UsageError("encoder: sequence length " + std::to_string(seq.ids.size()) +
                         " exceeds limit " + std::to_string(limit));
    }
    for (const int id : seq.ids) {
        if (id < 0 || id >= config.vocab_size) {
            throw UsageError("encoder: token id " + std::to_string(id) +
                             " out of range for vocab size " +
                             std::to_string(config.vocab_size));
        }
    }
}

Embedding finalize_embedding(const Matrix& cls_row, const EncoderConfig& config) {
    Embedding e = cls_row.row(0);
    if (config.normalize_embeddings) {
        const double n = e.norm();
        if (n > 0.0) {
            e /= n;
        }
    }
    return e;
}

}  // namespace

const FactorInstruction& instruction_for(Factor factor) {
    return kInstructions[static_cast<std::size_t>(factor)];
}

const char* factor_name(Factor factor) {
    switch (factor) {
        case Factor::semantic: return "semantic";
        case Factor::topic: return "topic";
        case Factor::citation: return "citation";
        case Factor::topic_classification: return "topic_classification";
    }
    return "unknown";
}

std::optional<Factor> factor_from_name(const std::string& name) {
    for (const auto& instr : kInstructions) {
        if (name == factor_name(instr.factor)) {
            return instr.factor;
        }
    }
    return std::nullopt;
}

void EncoderConfig::validate() const {
    if (num_layers < 1) {
        throw UsageError("encoder config: num_layers must be >= 1");
    }
    if (hidden_dim < 1 || num_heads < 1 || hidden_dim % num_heads != 0) {
        throw UsageError("encoder config: hidden_dim must be divisible by num_heads");
    }
    if (ffn_dim < 1 || max_instruction_len < 2 || max_paper_len < 2 || vocab_size < 4) {
        throw UsageError("encoder config: invalid dimensions");
    }
}

EncoderWeights EncoderWeights::init(const EncoderConfig& config, Rng& rng) {
    config.validate();
    const Index d = config.hidden_dim;
    const double std_init = 0.02;

    EncoderWeights w;
    w.token_embedding = normal_matrix(config.vocab_size, d, std_init, rng);
    w.position_embedding = normal_matrix(config.max_position(), d, std_init, rng);
    w.segment_embedding = normal_matrix(2, d, std_init, rng);
    w.layers.resize(static_cast<std::size_t>(config.num_layers));
    for (LayerWeights& lw : w.layers) {
        lw.query_proj = normal_matrix(d, d, std_init, rng);
        lw.key_proj = normal_matrix(d, d, std_init, rng);
        lw.value_proj = normal_matrix(d, d, std_init, rng);
        lw.output_proj = normal_matrix(d, d, std_init, rng);
        lw.attn_norm_gain = Matrix::Ones(1, d);
        lw.attn_norm_bias = Matrix::Zero(1, d);
        lw.ffn_in_weight = normal_matrix(d, config.ffn_dim, std_init, rng);
        lw.ffn_in_bias = Matrix::Zero(1, config.ffn_dim);
        lw.ffn_out_weight = normal_matrix(config.ffn_dim, d, std_init, rng);
        lw.ffn_out_bias = Matrix::Zero(1, d);
        lw.ffn_norm_gain = Matrix::Ones(1, d);
        lw.ffn_norm_bias = Matrix::Zero(1, d);
    }
    return w;
}

Matrix embed_inputs(const TokenSequence& seq, const EncoderWeights& weights,
                    const EncoderConfig& config) {
    check_sequence(seq, config, config.max_position());
    EagerOps ops;
    const WeightsRef<Matrix> ref = lift_weights(ops, weights);
    return EncoderStack<EagerOps>(ops, config, ref).embed(seq);
}

Matrix mha(const Matrix& h, const LayerWeights& lw, int num_heads, Index valid_keys) {
    if (valid_keys < 0) {
        valid_keys = h.rows();
    }
    const Index d = h.cols();
    const Index dh = d / num_heads;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    const Matrix q = matmul(h, lw.query_proj);
    const Matrix k = matmul(h, lw.key_proj);
    const Matrix v = matmul(h, lw.value_proj);
    Matrix concat(h.rows(), d);
    for (int u = 0; u < num_heads; ++u) {
        const Matrix scores =
            q.middleCols(u * dh, dh) * k.middleCols(u * dh, dh).transpose() * inv_sqrt_dh;
        const Matrix probs = softmax_rows_masked(scores, valid_keys);
        concat.middleCols(u * dh, dh).noalias() = probs * v.middleCols(u * dh, dh);
    }
    return concat;
}

Matrix mha_asymmetric(const Matrix& h_paper, const Matrix& h_instr, const LayerWeights& lw,
                      int num_heads, Index valid_paper_keys, Index valid_instr_keys) {
    if (h_instr.rows() > 0 && h_instr.cols() != h_paper.cols()) {
        throw ShapeError("mha_asymmetric: hidden dims disagree: " +
                         shape_string(h_paper.rows(), h_paper.cols()) + " vs " +
                         shape_string(h_instr.rows(), h_instr.cols()));
    }
    if (valid_paper_keys < 0) {
        valid_paper_keys = h_paper.rows();
    }
    if (valid_instr_keys < 0) {
        valid_instr_keys = h_instr.rows();
    }
    // Trim padded instruction rows; keys then form [instr valid ; paper].
    const Matrix instr = h_instr.topRows(valid_instr_keys);
    Matrix keys_src(instr.rows() + h_paper.rows(), h_paper.cols());
    if (instr.rows() > 0) {
        keys_src.topRows(instr.rows()) = instr;
    }
    keys_src.bottomRows(h_paper.rows()) = h_paper;
    const Index valid_keys = instr.rows() + valid_paper_keys;

    const Index d = h_paper.cols();
    const Index dh = d / num_heads;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    const Matrix q = matmul(h_paper, lw.query_proj);
    const Matrix k = matmul(keys_src, lw.key_proj);
    const Matrix v = matmul(keys_src, lw.value_proj);
    Matrix concat(h_paper.rows(), d);
    for (int u = 0; u < num_heads; ++u) {
        const Matrix scores =
            q.middleCols(u * dh, dh) * k.middleCols(u * dh, dh).transpose() * inv_sqrt_dh;
        const Matrix probs = softmax_rows_masked(scores, valid_keys);
        concat.middleCols(u * dh, dh).noalias() = probs * v.middleCols(u * dh, dh);
    }
    return concat;
}

LayerStates encode_token_states(const TokenSequence& seq, const EncoderWeights& weights,
                                const EncoderConfig& config) {
    check_sequence(seq, config, config.max_position());
    EagerOps ops;
    const WeightsRef<Matrix> ref = lift_weights(ops, weights);
    LayerStates out;
    out.layers = EncoderStack<EagerOps>(ops, config, ref).self_states(seq);
    out.attention_length = seq.attention_length;
    return out;
}

LayerStates encode_instruction(const FactorInstruction& instr, const Vocabulary& vocab,
                               const EncoderWeights& weights, const EncoderConfig& config) {
    const TokenSequence seq = encode(instr.text, vocab, config.max_instruction_len);
    return encode_token_states(seq, weights, config);
}

LayerStates empty_instruction_states(const EncoderConfig& config) {
    LayerStates out;
    out.layers.assign(static_cast<std::size_t>(config.num_layers) + 1,
                      Matrix::Zero(0, config.hidden_dim));
    out.attention_length = 0;
    return out;
}

Embedding encode_paper(const TokenSequence& paper, const LayerStates& instr_states,
                       const EncoderWeights& weights, const EncoderConfig& config) {
    check_sequence(paper, config, config.max_paper_len);
    if (instr_states.depth() != config.num_layers) {
        throw UsageError("encode_paper: instruction states carry " +
                         std::to_string(instr_states.depth()) + " layers, config has " +
                         std::to_string(config.num_layers));
    }
    EagerOps ops;
    const WeightsRef<Matrix> ref = lift_weights(ops, weights);
    const EncoderStack<EagerOps> stack(ops, config, ref);
    const Matrix cls =
        stack.paper_cls(paper, &instr_states.layers, instr_states.attention_length);
    return finalize_embedding(cls, config);
}

Embedding encode_paper_uninstructed(const TokenSequence& paper, const EncoderWeights& weights,
                                    const EncoderConfig& config) {
    check_sequence(paper, config, config.max_paper_len);
    EagerOps ops;
    const WeightsRef<Matrix> ref = lift_weights(ops, weights);
    const Matrix cls = EncoderStack<EagerOps>(ops, config, ref).paper_cls(paper, nullptr, 0);
    return finalize_embedding(cls, config);
}

namespace {

constexpr char kCheckpointMagic[4] = {'C', 'O', 'F', 'W'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) {
        throw FormatError("checkpoint: truncated file: " + path);
    }
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const EncoderConfig& config,
                     const EncoderWeights& weights) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("checkpoint: cannot open for writing: " + path);
    }
    out.write(kCheckpointMagic, 4);
    write_pod<std::uint32_t>(out, kCheckpointVersion);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(config.num_layers));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(config.hidden_dim));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(config.num_heads));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(config.ffn_dim));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(config.max_instruction_len));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(config.max_paper_len));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(config.vocab_size));
    write_pod<std::uint32_t>(out, config.normalize_embeddings ? 1u : 0u);

    weights.for_each_parameter([&](const std::string&, const Matrix& m) {
        for (Index r = 0; r < m.rows(); ++r) {
            for (Index c = 0; c < m.cols(); ++c) {
                write_pod<float>(out, static_cast<float>(m(r, c)));
            }
        }
    });
    if (!out) {
        throw DataError("checkpoint: write failed: " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("checkpoint: cannot open: " + path);
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw FormatError("checkpoint: bad magic in " + path);
    }
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kCheckpointVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " in " +
                          path);
    }
    Checkpoint cp;
    cp.config.num_layers = static_cast<int>(read_pod<std::uint32_t>(in, path));
    cp.config.hidden_dim = static_cast<int>(read_pod<std::uint32_t>(in, path));
    cp.config.num_heads = static_cast<int>(read_pod<std::uint32_t>(in, path));
    cp.config.ffn_dim = static_cast<int>(read_pod<std::uint32_t>(in, path));
    cp.config.max_instruction_len = static_cast<int>(read_pod<std::uint32_t>(in, path));
    cp.config.max_paper_len = static_cast<int>(read_pod<std::uint32_t>(in, path));
    cp.config.vocab_size = static_cast<int>(read_pod<std::uint32_t>(in, path));
    cp.config.normalize_embeddings = read_pod<std::uint32_t>(in, path) != 0;
    cp.config.validate();

    Rng rng(0);
    cp.weights = EncoderWeights::init(cp.config, rng);  // allocates the right shapes
    cp.weights.for_each_parameter([&](const std::string&, Matrix& m) {
        for (Index r = 0; r < m.rows(); ++r) {
            for (Index c = 0; c < m.cols(); ++c) {
                m(r, c) = static_cast<double>(read_pod<float>(in, path));
            }
        }
    });
    // Must be at end of file now.
    char extra;
    in.read(&extra, 1);
    if (in) {
        throw FormatError("checkpoint: trailing bytes in " + path);
    }
    return cp;
}

}  // namespace cof
