#pragma once

#include <map>
#include <string>
#include <vector>

#include "cof/tensor.hpp"

namespace cof {

// Gradient of the recorded scalar w.r.t. each registered parameter, keyed by
// parameter name. std::map keeps iteration order deterministic.
using GradientMap = std::map<std::string, Matrix>;

// Handle into a Tape.
struct Value {
    int index = -1;
    bool valid() const { return index >= 0; }
};

// Reverse-mode tape. Records primitive operations in topological order
// (inputs always precede their consumers); backward() sweeps the record once
// in reverse. Values are immutable once produced. A Tape belongs to a single
// training step and must not be shared across threads.
class Tape {
public:
    Tape();

    // Leaves.
    Value constant(Matrix value);
    Value parameter(const std::string& name, const Matrix& value);

    // Primitives. Shapes are validated; every output is a dense matrix.
    Value gather_rows(Value table, std::vector<int> row_ids);
    Value matmul(Value a, Value b);
    Value transpose(Value a);
    Value add(Value a, Value b);
    Value scale(Value a, double factor);
    Value add_row_vector(Value a, Value row);  // broadcast a 1 x d row over all rows
    Value softmax_rows_masked(Value a, Index valid_cols);
    Value layer_norm(Value x, Value gain, Value bias, double eps);
    Value gelu(Value a);
    Value concat_rows(Value top, Value bottom);
    Value concat_cols(const std::vector<Value>& parts);
    Value slice_cols(Value a, Index start, Index count);
    Value top_rows(Value a, Index count);
    Value row(Value a, Index r);
    Value dot(Value a, Value b);      // 1 x d  .  1 x d  ->  1 x 1
    Value sum_all(Value a);           // scalar sum of all entries
    Value mean(const std::vector<Value>& scalars);

    // InfoNCE-style loss over one anchor: -log softmax of the positive score
    // among {positive, negatives}, log-sum-exp stabilized.
    Value contrastive_loss(Value anchor, Value positive, const std::vector<Value>& negatives);

    const Matrix& value(Value v) const;
    double scalar(Value v) const;
    std::size_t node_count() const { return nodes_.size(); }

    // Gradients of the scalar at `loss` w.r.t. every registered parameter
    // (zero matrices for parameters off the path). Throws UsageError when the
    // terminal node is not 1 x 1.
    GradientMap backward(Value loss, double seed = 1.0) const;

private:
    enum class Op {
        kConstant,
        kParameter,
        kGatherRows,
        kMatMul,
        kTranspose,
        kAdd,
        kScale,
        kAddRowVector,
        kSoftmaxRowsMasked,
        kLayerNorm,
        kGelu,
        kConcatRows,
        kConcatCols,
        kSliceCols,
        kTopRows,
        kRow,
        kDot,
        kSumAll,
        kMean,
        kContrastiveLoss,
    };

    struct Node {
        Op op;
        Matrix value;
        std::vector<int> inputs;
        std::vector<Index> iargs;    // op-specific integer arguments
        std::vector<int> row_ids;    // kGatherRows only
        double darg = 0.0;           // scale factor / layer-norm eps
        std::vector<Matrix> saved;   // op-specific forward byproducts
        int param = -1;              // index into params_ for kParameter
    };

    Value push(Node node);
    const Node& node(Value v) const;

    std::vector<Node> nodes_;
    std::vector<std::string> param_names_;
    std::vector<int> param_nodes_;
};

}  // namespace cof
