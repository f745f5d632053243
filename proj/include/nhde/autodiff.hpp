#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

// Minimal reverse-mode differentiation over dense row-major matrices. A Tape
// records every operation; backward() walks it in reverse and accumulates
// gradients into every node that (transitively) depends on a variable.
namespace nhde::ad {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return data.size(); }

    friend bool operator==(Matrix const&, Matrix const&) = default;
};

class Tape;

// Handle to a tape node.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Matrix const& value() const;
    Matrix const& grad() const;
    std::size_t rows() const { return value().rows; }
    std::size_t cols() const { return value().cols; }
    std::size_t id() const { return id_; }
    Tape* tape() const { return tape_; }
    double scalar() const { return value().data.at(0); }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    // Leaf whose gradient is tracked.
    Var variable(Matrix value);
    // Leaf treated as a constant.
    Var constant(Matrix value);

    Matrix const& value(std::size_t id) const { return nodes_[id].value; }
    Matrix const& grad(std::size_t id) const;
    bool tracks(std::size_t id) const { return nodes_[id].tracked; }
    std::size_t size() const { return nodes_.size(); }

    // Seeds d(root)/d(root) = 1 for a 1x1 root and propagates backwards.
    void backward(Var root);

    // Internal: records a node produced by an operation.
    using Backward = std::function<void(Tape&, std::size_t)>;
    Var record(Matrix value, std::vector<std::size_t> const& inputs, Backward backward);
    Matrix& grad_ref(std::size_t id);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool tracked = false;
        Backward backward;
    };
    std::vector<Node> nodes_;
};

// Row mask for attention/selection: mask[r * cols + c] != 0 excludes entry c.
using Mask = std::vector<std::uint8_t>;

Var matmul(Var a, Var b);      // a [n x k] * b [k x m]
Var matmul_nt(Var a, Var b);   // a [n x k] * b^T, b [m x k]
Var add(Var a, Var b);
Var add_row(Var a, Var row);   // broadcast a 1 x m row over every row of a
Var scale(Var a, double s);
Var relu(Var a);
Var tanh(Var a);
Var concat_cols(std::vector<Var> const& parts);
Var concat_rows(std::vector<Var> const& parts);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var gather_rows(Var a, std::vector<std::size_t> const& rows);
Var mean_rows(Var a);          // 1 x m
Var repeat_rows(Var row, std::size_t count);
Var reshape(Var a, std::size_t rows, std::size_t cols);
// Row-wise softmax; masked entries get probability 0. A fully masked row
// yields zeros.
Var softmax_rows(Var a, Mask const* mask = nullptr);
// Per-column normalization across rows followed by an affine map.
Var normalize_rows(Var a, Var gamma, Var beta, double eps = 1e-5);
// Log-probability of actions[r] under a masked softmax of row r, as an n x 1
// column. Inactive rows contribute 0.
Var log_softmax_pick(Var logits, Mask const& mask, std::vector<int> const& actions, std::vector<std::uint8_t> const& active);
// sum_r coeff[r] * a(r, 0) as a 1 x 1 node.
Var weighted_sum(Var column, std::vector<double> const& coeff);
Var sum(Var a);

} // namespace nhde::ad
