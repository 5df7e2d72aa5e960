#include "cof/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace cof {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": shapes disagree: " +
                         shape_string(a.rows(), a.cols()) + " vs " +
                         shape_string(b.rows(), b.cols()));
    }
}

void check_row_vector(const Matrix& m, const char* what) {
    if (m.rows() != 1) {
        throw ShapeError(std::string(what) + ": expected a 1 x d matrix, got " +
                         shape_string(m.rows(), m.cols()));
    }
}

}  // namespace

Tape::Tape() {
    nodes_.reserve(1024);
}

Value Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Value{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Value v) const {
    if (!v.valid() || static_cast<std::size_t>(v.index) >= nodes_.size()) {
        throw UsageError("tape: invalid value handle");
    }
    return nodes_[static_cast<std::size_t>(v.index)];
}

Value Tape::constant(Matrix value) {
    Node n;
    n.op = Op::kConstant;
    n.value = std::move(value);
    return push(std::move(n));
}

Value Tape::parameter(const std::string& name, const Matrix& value) {
    Node n;
    n.op = Op::kParameter;
    n.value = value;
    n.param = static_cast<int>(param_names_.size());
    param_names_.push_back(name);
    Value v = push(std::move(n));
    param_nodes_.push_back(v.index);
    return v;
}

Value Tape::gather_rows(Value table, std::vector<int> row_ids) {
    const Matrix& t = node(table).value;
    Matrix out(static_cast<Index>(row_ids.size()), t.cols());
    for (std::size_t i = 0; i < row_ids.size(); ++i) {
        const int r = row_ids[i];
        if (r < 0 || r >= t.rows()) {
            throw ShapeError("gather_rows: row id " + std::to_string(r) +
                             " out of range for " + shape_string(t.rows(), t.cols()));
        }
        out.row(static_cast<Index>(i)) = t.row(r);
    }
    Node n;
    n.op = Op::kGatherRows;
    n.value = std::move(out);
    n.inputs = {table.index};
    n.row_ids = std::move(row_ids);
    return push(std::move(n));
}

Value Tape::matmul(Value a, Value b) {
    Node n;
    n.op = Op::kMatMul;
    n.value = cof::matmul(node(a).value, node(b).value);
    n.inputs = {a.index, b.index};
    return push(std::move(n));
}

Value Tape::transpose(Value a) {
    Node n;
    n.op = Op::kTranspose;
    n.value = node(a).value.transpose();
    n.inputs = {a.index};
    return push(std::move(n));
}

Value Tape::add(Value a, Value b) {
    check_same_shape(node(a).value, node(b).value, "add");
    Node n;
    n.op = Op::kAdd;
    n.value = node(a).value + node(b).value;
    n.inputs = {a.index, b.index};
    return push(std::move(n));
}

Value Tape::scale(Value a, double factor) {
    Node n;
    n.op = Op::kScale;
    n.value = node(a).value * factor;
    n.inputs = {a.index};
    n.darg = factor;
    return push(std::move(n));
}

Value Tape::add_row_vector(Value a, Value row) {
    const Matrix& m = node(a).value;
    const Matrix& r = node(row).value;
    check_row_vector(r, "add_row_vector");
    if (r.cols() != m.cols()) {
        throw ShapeError("add_row_vector: width mismatch: " + shape_string(m.rows(), m.cols()) +
                         " vs " + shape_string(r.rows(), r.cols()));
    }
    Node n;
    n.op = Op::kAddRowVector;
    n.value = m.rowwise() + r.row(0);
    n.inputs = {a.index, row.index};
    return push(std::move(n));
}

Value Tape::softmax_rows_masked(Value a, Index valid_cols) {
    Node n;
    n.op = Op::kSoftmaxRowsMasked;
    n.value = cof::softmax_rows_masked(node(a).value, valid_cols);
    n.inputs = {a.index};
    n.iargs = {valid_cols};
    return push(std::move(n));
}

Value Tape::layer_norm(Value x, Value gain, Value bias, double eps) {
    const Matrix& xv = node(x).value;
    // Forward recomputed here so that xhat and 1/std are saved for backward.
    const auto d = static_cast<double>(xv.cols());
    Matrix xhat(xv.rows(), xv.cols());
    Matrix inv_std(xv.rows(), 1);
    for (Index r = 0; r < xv.rows(); ++r) {
        const double mean = xv.row(r).mean();
        const double var = (xv.row(r).array() - mean).square().sum() / d;
        const double inv = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (xv.row(r).array() - mean) * inv;
        inv_std(r, 0) = inv;
    }
    const Matrix& g = node(gain).value;
    const Matrix& b = node(bias).value;
    check_row_vector(g, "layer_norm gain");
    check_row_vector(b, "layer_norm bias");
    Node n;
    n.op = Op::kLayerNorm;
    n.value = (xhat.array().rowwise() * g.row(0).array()).rowwise() + b.row(0).array();
    n.inputs = {x.index, gain.index, bias.index};
    n.darg = eps;
    n.saved.push_back(std::move(xhat));
    n.saved.push_back(std::move(inv_std));
    return push(std::move(n));
}

Value Tape::gelu(Value a) {
    Node n;
    n.op = Op::kGelu;
    n.value = cof::gelu(node(a).value);
    n.inputs = {a.index};
    return push(std::move(n));
}

Value Tape::concat_rows(Value top, Value bottom) {
    const Matrix& t = node(top).value;
    const Matrix& b = node(bottom).value;
    if (t.cols() != b.cols()) {
        throw ShapeError("concat_rows: width mismatch: " + shape_string(t.rows(), t.cols()) +
                         " vs " + shape_string(b.rows(), b.cols()));
    }
    Matrix out(t.rows() + b.rows(), t.cols());
    out.topRows(t.rows()) = t;
    out.bottomRows(b.rows()) = b;
    Node n;
    n.op = Op::kConcatRows;
    n.value = std::move(out);
    n.inputs = {top.index, bottom.index};
    n.iargs = {t.rows()};
    return push(std::move(n));
}

Value Tape::concat_cols(const std::vector<Value>& parts) {
    if (parts.empty()) {
        throw UsageError("concat_cols: no inputs");
    }
    Index rows = node(parts[0]).value.rows();
    Index cols = 0;
    for (Value p : parts) {
        if (node(p).value.rows() != rows) {
            throw ShapeError("concat_cols: row count mismatch");
        }
        cols += node(p).value.cols();
    }
    Matrix out(rows, cols);
    Node n;
    n.op = Op::kConcatCols;
    Index at = 0;
    for (Value p : parts) {
        const Matrix& m = node(p).value;
        out.middleCols(at, m.cols()) = m;
        n.iargs.push_back(m.cols());
        n.inputs.push_back(p.index);
        at += m.cols();
    }
    n.value = std::move(out);
    return push(std::move(n));
}

Value Tape::slice_cols(Value a, Index start, Index count) {
    const Matrix& m = node(a).value;
    if (start < 0 || count < 0 || start + count > m.cols()) {
        throw ShapeError("slice_cols: [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of range for " +
                         shape_string(m.rows(), m.cols()));
    }
    Node n;
    n.op = Op::kSliceCols;
    n.value = m.middleCols(start, count);
    n.inputs = {a.index};
    n.iargs = {start, count};
    return push(std::move(n));
}

Value Tape::top_rows(Value a, Index count) {
    const Matrix& m = node(a).value;
    if (count < 0 || count > m.rows()) {
        throw ShapeError("top_rows: count " + std::to_string(count) + " out of range for " +
                         shape_string(m.rows(), m.cols()));
    }
    Node n;
    n.op = Op::kTopRows;
    n.value = m.topRows(count);
    n.inputs = {a.index};
    n.iargs = {count};
    return push(std::move(n));
}

Value Tape::row(Value a, Index r) {
    const Matrix& m = node(a).value;
    if (r < 0 || r >= m.rows()) {
        throw ShapeError("row: index " + std::to_string(r) + " out of range for " +
                         shape_string(m.rows(), m.cols()));
    }
    Node n;
    n.op = Op::kRow;
    n.value = m.row(r);
    n.inputs = {a.index};
    n.iargs = {r};
    return push(std::move(n));
}

Value Tape::dot(Value a, Value b) {
    const Matrix& av = node(a).value;
    const Matrix& bv = node(b).value;
    check_row_vector(av, "dot");
    check_row_vector(bv, "dot");
    check_same_shape(av, bv, "dot");
    Node n;
    n.op = Op::kDot;
    n.value = Matrix::Constant(1, 1, av.row(0).dot(bv.row(0)));
    n.inputs = {a.index, b.index};
    return push(std::move(n));
}

Value Tape::sum_all(Value a) {
    Node n;
    n.op = Op::kSumAll;
    n.value = Matrix::Constant(1, 1, node(a).value.sum());
    n.inputs = {a.index};
    return push(std::move(n));
}

Value Tape::mean(const std::vector<Value>& scalars) {
    if (scalars.empty()) {
        throw UsageError("mean: no inputs");
    }
    double total = 0.0;
    Node n;
    n.op = Op::kMean;
    for (Value s : scalars) {
        const Matrix& m = node(s).value;
        if (m.rows() != 1 || m.cols() != 1) {
            throw ShapeError("mean: inputs must be scalars");
        }
        total += m(0, 0);
        n.inputs.push_back(s.index);
    }
    n.value = Matrix::Constant(1, 1, total / static_cast<double>(scalars.size()));
    return push(std::move(n));
}

Value Tape::contrastive_loss(Value anchor, Value positive,
                             const std::vector<Value>& negatives) {
    const Matrix& a = node(anchor).value;
    check_row_vector(a, "contrastive_loss anchor");
    const Index d = a.cols();
    const std::size_t t = negatives.size();

    // scores[0] is the positive; log-sum-exp stabilized.
    Eigen::RowVectorXd scores(static_cast<Index>(t) + 1);
    const Matrix& p = node(positive).value;
    check_same_shape(a, p, "contrastive_loss positive");
    scores(0) = a.row(0).dot(p.row(0));
    for (std::size_t i = 0; i < t; ++i) {
        const Matrix& q = node(negatives[i]).value;
        check_same_shape(a, q, "contrastive_loss negative");
        scores(static_cast<Index>(i) + 1) = a.row(0).dot(q.row(0));
    }
    const double mx = scores.maxCoeff();
    Eigen::RowVectorXd probs = (scores.array() - mx).exp();
    const double z = probs.sum();
    const double loss = std::log(z) + mx - scores(0);
    probs /= z;

    Node n;
    n.op = Op::kContrastiveLoss;
    n.value = Matrix::Constant(1, 1, loss);
    n.inputs = {anchor.index, positive.index};
    for (Value v : negatives) {
        n.inputs.push_back(v.index);
    }
    Matrix probs_m(1, static_cast<Index>(t) + 1);
    probs_m.row(0) = probs;
    n.saved.push_back(std::move(probs_m));
    (void)d;
    return push(std::move(n));
}

const Matrix& Tape::value(Value v) const {
    return node(v).value;
}

double Tape::scalar(Value v) const {
    const Matrix& m = node(v).value;
    if (m.rows() != 1 || m.cols() != 1) {
        throw UsageError("scalar: node is " + shape_string(m.rows(), m.cols()) + ", not 1x1");
    }
    return m(0, 0);
}

GradientMap Tape::backward(Value loss, double seed) const {
    const Node& terminal = node(loss);
    if (terminal.value.rows() != 1 || terminal.value.cols() != 1) {
        throw UsageError("backward: terminal node must be scalar, got " +
                         shape_string(terminal.value.rows(), terminal.value.cols()));
    }

    std::vector<Matrix> grads(nodes_.size());
    std::vector<char> seen(nodes_.size(), 0);
    auto accum = [&](int idx, const auto& g) {
        if (!seen[static_cast<std::size_t>(idx)]) {
            grads[static_cast<std::size_t>(idx)] =
                Matrix::Zero(nodes_[static_cast<std::size_t>(idx)].value.rows(),
                             nodes_[static_cast<std::size_t>(idx)].value.cols());
            seen[static_cast<std::size_t>(idx)] = 1;
        }
        grads[static_cast<std::size_t>(idx)] += g;
    };

    accum(loss.index, Matrix::Constant(1, 1, seed));

    for (int i = loss.index; i >= 0; --i) {
        const auto idx = static_cast<std::size_t>(i);
        if (!seen[idx]) {
            continue;
        }
        const Node& n = nodes_[idx];
        const Matrix& g = grads[idx];
        switch (n.op) {
            case Op::kConstant:
            case Op::kParameter:
                break;
            case Op::kGatherRows: {
                const Matrix& table = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
                Matrix dt = Matrix::Zero(table.rows(), table.cols());
                for (std::size_t r = 0; r < n.row_ids.size(); ++r) {
                    dt.row(n.row_ids[r]) += g.row(static_cast<Index>(r));
                }
                accum(n.inputs[0], dt);
                break;
            }
            case Op::kMatMul: {
                const Matrix& a = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
                const Matrix& b = nodes_[static_cast<std::size_t>(n.inputs[1])].value;
                accum(n.inputs[0], (g * b.transpose()).eval());
                accum(n.inputs[1], (a.transpose() * g).eval());
                break;
            }
            case Op::kTranspose:
                accum(n.inputs[0], g.transpose().eval());
                break;
            case Op::kAdd:
                accum(n.inputs[0], g);
                accum(n.inputs[1], g);
                break;
            case Op::kScale:
                accum(n.inputs[0], (g * n.darg).eval());
                break;
            case Op::kAddRowVector:
                accum(n.inputs[0], g);
                accum(n.inputs[1], g.colwise().sum().eval());
                break;
            case Op::kSoftmaxRowsMasked: {
                const Index valid = n.iargs[0];
                Matrix dx = Matrix::Zero(n.value.rows(), n.value.cols());
                for (Index r = 0; r < n.value.rows(); ++r) {
                    const auto pr = n.value.row(r).head(valid).array();
                    const auto gr = g.row(r).head(valid).array();
                    const double inner = (pr * gr).sum();
                    dx.row(r).head(valid) = pr * (gr - inner);
                }
                accum(n.inputs[0], dx);
                break;
            }
            case Op::kLayerNorm: {
                const Matrix& xhat = n.saved[0];
                const Matrix& inv_std = n.saved[1];
                const Matrix& gain = nodes_[static_cast<std::size_t>(n.inputs[1])].value;
                const auto d = static_cast<double>(xhat.cols());
                Matrix dx(xhat.rows(), xhat.cols());
                Matrix dgain = Matrix::Zero(1, xhat.cols());
                Matrix dbias = Matrix::Zero(1, xhat.cols());
                for (Index r = 0; r < xhat.rows(); ++r) {
                    const auto gr = g.row(r).array();
                    const auto xr = xhat.row(r).array();
                    dgain.row(0).array() += gr * xr;
                    dbias.row(0).array() += gr;
                    const Eigen::ArrayXXd h = gr * gain.row(0).array();
                    const double m1 = h.sum() / d;
                    const double m2 = (h * xr).sum() / d;
                    dx.row(r).array() = (h - m1 - xr * m2) * inv_std(r, 0);
                }
                accum(n.inputs[0], dx);
                accum(n.inputs[1], dgain);
                accum(n.inputs[2], dbias);
                break;
            }
            case Op::kGelu: {
                const Matrix& x = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
                accum(n.inputs[0],
                      (g.array() * x.unaryExpr([](double v) {
                                        return detail::gelu_grad_scalar(v);
                                    }).array())
                          .matrix()
                          .eval());
                break;
            }
            case Op::kConcatRows: {
                const Index top = n.iargs[0];
                accum(n.inputs[0], g.topRows(top).eval());
                accum(n.inputs[1], g.bottomRows(g.rows() - top).eval());
                break;
            }
            case Op::kConcatCols: {
                Index at = 0;
                for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                    const Index w = n.iargs[k];
                    accum(n.inputs[k], g.middleCols(at, w).eval());
                    at += w;
                }
                break;
            }
            case Op::kSliceCols: {
                const Matrix& a = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
                Matrix da = Matrix::Zero(a.rows(), a.cols());
                da.middleCols(n.iargs[0], n.iargs[1]) = g;
                accum(n.inputs[0], da);
                break;
            }
            case Op::kTopRows: {
                const Matrix& a = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
                Matrix da = Matrix::Zero(a.rows(), a.cols());
                da.topRows(n.iargs[0]) = g;
                accum(n.inputs[0], da);
                break;
            }
            case Op::kRow: {
                const Matrix& a = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
                Matrix da = Matrix::Zero(a.rows(), a.cols());
                da.row(n.iargs[0]) = g;
                accum(n.inputs[0], da);
                break;
            }
            case Op::kDot: {
                const double s = g(0, 0);
                const Matrix& a = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
                const Matrix& b = nodes_[static_cast<std::size_t>(n.inputs[1])].value;
                accum(n.inputs[0], (s * b).eval());
                accum(n.inputs[1], (s * a).eval());
                break;
            }
            case Op::kSumAll: {
                const Matrix& a = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
                accum(n.inputs[0], Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
                break;
            }
            case Op::kMean: {
                const double share = g(0, 0) / static_cast<double>(n.inputs.size());
                for (int in : n.inputs) {
                    accum(in, Matrix::Constant(1, 1, share));
                }
                break;
            }
            case Op::kContrastiveLoss: {
                const double s = g(0, 0);
                const Matrix& probs = n.saved[0];
                const Matrix& a = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
                const Matrix& pos = nodes_[static_cast<std::size_t>(n.inputs[1])].value;
                Matrix da = (probs(0, 0) - 1.0) * pos;
                accum(n.inputs[1], (s * (probs(0, 0) - 1.0) * a).eval());
                for (std::size_t t = 2; t < n.inputs.size(); ++t) {
                    const Matrix& q = nodes_[static_cast<std::size_t>(n.inputs[t])].value;
                    const double pt = probs(0, static_cast<Index>(t) - 1);
                    da += pt * q;
                    accum(n.inputs[t], (s * pt * a).eval());
                }
                accum(n.inputs[0], (s * da).eval());
                break;
            }
        }
    }

    GradientMap out;
    for (std::size_t k = 0; k < param_nodes_.size(); ++k) {
        const auto idx = static_cast<std::size_t>(param_nodes_[k]);
        if (seen[idx]) {
            out[param_names_[k]] = std::move(grads[idx]);
        } else {
            out[param_names_[k]] = Matrix::Zero(nodes_[idx].value.rows(), nodes_[idx].value.cols());
        }
    }
    return out;
}

}  // namespace cof
