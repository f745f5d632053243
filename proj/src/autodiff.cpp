#include "nhde/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nhde::ad {

namespace {

void require(bool ok, char const* what)
{
    if (!ok) { throw std::invalid_argument(std::string("autodiff: ") + what); }
}

} // namespace

Matrix const& Var::value() const { return tape_->value(id_); }
Matrix const& Var::grad() const { return tape_->grad(id_); }

Var Tape::variable(Matrix value)
{
    nodes_.push_back({std::move(value), {}, true, {}});
    return {this, nodes_.size() - 1};
}

Var Tape::constant(Matrix value)
{
    nodes_.push_back({std::move(value), {}, false, {}});
    return {this, nodes_.size() - 1};
}

Matrix const& Tape::grad(std::size_t id) const
{
    static Matrix const empty;
    return nodes_[id].grad.data.empty() ? empty : nodes_[id].grad;
}

Matrix& Tape::grad_ref(std::size_t id)
{
    auto& node = nodes_[id];
    if (node.grad.data.empty()) { node.grad = Matrix(node.value.rows, node.value.cols); }
    return node.grad;
}

Var Tape::record(Matrix value, std::vector<std::size_t> const& inputs, Backward backward)
{
    bool tracked = false;
    for (auto i : inputs) { tracked = tracked || nodes_[i].tracked; }
    nodes_.push_back({std::move(value), {}, tracked, tracked ? std::move(backward) : Backward{}});
    return {this, nodes_.size() - 1};
}

void Tape::backward(Var root)
{
    require(root.tape() == this, "root belongs to another tape");
    require(value(root.id()).size() == 1, "backward root must be 1x1");
    grad_ref(root.id()).data[0] = 1.0;
    for (std::size_t id = root.id() + 1; id-- > 0;) {
        auto& node = nodes_[id];
        if (node.tracked && node.backward && !node.grad.data.empty()) { node.backward(*this, id); }
    }
}

Var matmul(Var a, Var b)
{
    auto const& A = a.value();
    auto const& B = b.value();
    require(A.cols == B.rows, "matmul shape mismatch");
    Matrix C(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t k = 0; k < A.cols; ++k) {
            double const aik = A(i, k);
            if (aik == 0.0) { continue; }
            double const* brow = &B.data[k * B.cols];
            double* crow = &C.data[i * C.cols];
            for (std::size_t j = 0; j < B.cols; ++j) { crow[j] += aik * brow[j]; }
        }
    }
    auto ia = a.id();
    auto ib = b.id();
    return a.tape()->record(std::move(C), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto const& A = t.value(ia);
        auto const& B = t.value(ib);
        if (t.tracks(ia)) {
            auto& GA = t.grad_ref(ia);
            for (std::size_t i = 0; i < A.rows; ++i) {
                for (std::size_t k = 0; k < A.cols; ++k) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < B.cols; ++j) { s += G(i, j) * B(k, j); }
                    GA(i, k) += s;
                }
            }
        }
        if (t.tracks(ib)) {
            auto& GB = t.grad_ref(ib);
            for (std::size_t i = 0; i < A.rows; ++i) {
                for (std::size_t k = 0; k < A.cols; ++k) {
                    double const aik = A(i, k);
                    if (aik == 0.0) { continue; }
                    for (std::size_t j = 0; j < B.cols; ++j) { GB(k, j) += aik * G(i, j); }
                }
            }
        }
    });
}

Var matmul_nt(Var a, Var b)
{
    auto const& A = a.value();
    auto const& B = b.value();
    require(A.cols == B.cols, "matmul_nt shape mismatch");
    Matrix C(A.rows, B.rows);
    for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t j = 0; j < B.rows; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < A.cols; ++k) { s += A(i, k) * B(j, k); }
            C(i, j) = s;
        }
    }
    auto ia = a.id();
    auto ib = b.id();
    return a.tape()->record(std::move(C), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto const& A = t.value(ia);
        auto const& B = t.value(ib);
        if (t.tracks(ia)) {
            auto& GA = t.grad_ref(ia);
            for (std::size_t i = 0; i < A.rows; ++i) {
                for (std::size_t j = 0; j < B.rows; ++j) {
                    double const g = G(i, j);
                    if (g == 0.0) { continue; }
                    for (std::size_t k = 0; k < A.cols; ++k) { GA(i, k) += g * B(j, k); }
                }
            }
        }
        if (t.tracks(ib)) {
            auto& GB = t.grad_ref(ib);
            for (std::size_t i = 0; i < A.rows; ++i) {
                for (std::size_t j = 0; j < B.rows; ++j) {
                    double const g = G(i, j);
                    if (g == 0.0) { continue; }
                    for (std::size_t k = 0; k < A.cols; ++k) { GB(j, k) += g * A(i, k); }
                }
            }
        }
    });
}

Var add(Var a, Var b)
{
    auto const& A = a.value();
    auto const& B = b.value();
    require(A.rows == B.rows && A.cols == B.cols, "add shape mismatch");
    Matrix C = A;
    for (std::size_t i = 0; i < C.size(); ++i) { C.data[i] += B.data[i]; }
    auto ia = a.id();
    auto ib = b.id();
    return a.tape()->record(std::move(C), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        for (auto in : {ia, ib}) {
            if (!t.tracks(in)) { continue; }
            auto& GI = t.grad_ref(in);
            for (std::size_t i = 0; i < G.size(); ++i) { GI.data[i] += G.data[i]; }
        }
    });
}

Var add_row(Var a, Var row)
{
    auto const& A = a.value();
    auto const& R = row.value();
    require(R.rows == 1 && R.cols == A.cols, "add_row shape mismatch");
    Matrix C = A;
    for (std::size_t i = 0; i < C.rows; ++i) {
        for (std::size_t j = 0; j < C.cols; ++j) { C(i, j) += R(0, j); }
    }
    auto ia = a.id();
    auto ir = row.id();
    return a.tape()->record(std::move(C), {ia, ir}, [ia, ir](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        if (t.tracks(ia)) {
            auto& GA = t.grad_ref(ia);
            for (std::size_t i = 0; i < G.size(); ++i) { GA.data[i] += G.data[i]; }
        }
        if (t.tracks(ir)) {
            auto& GR = t.grad_ref(ir);
            for (std::size_t i = 0; i < G.rows; ++i) {
                for (std::size_t j = 0; j < G.cols; ++j) { GR(0, j) += G(i, j); }
            }
        }
    });
}

Var scale(Var a, double s)
{
    Matrix C = a.value();
    for (auto& v : C.data) { v *= s; }
    auto ia = a.id();
    return a.tape()->record(std::move(C), {ia}, [ia, s](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto& GA = t.grad_ref(ia);
        for (std::size_t i = 0; i < G.size(); ++i) { GA.data[i] += s * G.data[i]; }
    });
}

Var relu(Var a)
{
    Matrix C = a.value();
    for (auto& v : C.data) { v = v > 0.0 ? v : 0.0; }
    auto ia = a.id();
    return a.tape()->record(std::move(C), {ia}, [ia](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto const& A = t.value(ia);
        auto& GA = t.grad_ref(ia);
        for (std::size_t i = 0; i < G.size(); ++i) {
            if (A.data[i] > 0.0) { GA.data[i] += G.data[i]; }
        }
    });
}

Var tanh(Var a)
{
    Matrix C = a.value();
    for (auto& v : C.data) { v = std::tanh(v); }
    auto ia = a.id();
    return a.tape()->record(std::move(C), {ia}, [ia](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto const& Y = t.value(self);
        auto& GA = t.grad_ref(ia);
        for (std::size_t i = 0; i < G.size(); ++i) { GA.data[i] += G.data[i] * (1.0 - Y.data[i] * Y.data[i]); }
    });
}

Var concat_cols(std::vector<Var> const& parts)
{
    require(!parts.empty(), "concat_cols of nothing");
    std::size_t const rows = parts.front().rows();
    std::size_t cols = 0;
    std::vector<std::size_t> ids;
    std::vector<std::size_t> offsets;
    for (auto const& p : parts) {
        require(p.rows() == rows, "concat_cols row mismatch");
        offsets.push_back(cols);
        cols += p.cols();
        ids.push_back(p.id());
    }
    Matrix C(rows, cols);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        auto const& P = parts[k].value();
        for (std::size_t i = 0; i < rows; ++i) {
            std::copy_n(&P.data[i * P.cols], P.cols, &C.data[i * cols + offsets[k]]);
        }
    }
    return parts.front().tape()->record(std::move(C), ids, [ids, offsets](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (!t.tracks(ids[k])) { continue; }
            auto& GP = t.grad_ref(ids[k]);
            for (std::size_t i = 0; i < GP.rows; ++i) {
                for (std::size_t j = 0; j < GP.cols; ++j) { GP(i, j) += G(i, offsets[k] + j); }
            }
        }
    });
}

Var concat_rows(std::vector<Var> const& parts)
{
    require(!parts.empty(), "concat_rows of nothing");
    std::size_t const cols = parts.front().cols();
    std::vector<std::size_t> ids;
    Matrix C(0, cols);
    for (auto const& p : parts) {
        require(p.cols() == cols, "concat_rows column mismatch");
        auto const& P = p.value();
        C.data.insert(C.data.end(), P.data.begin(), P.data.end());
        C.rows += P.rows;
        ids.push_back(p.id());
    }
    return parts.front().tape()->record(std::move(C), ids, [ids](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        std::size_t offset = 0;
        for (auto id : ids) {
            auto const n = t.value(id).size();
            if (t.tracks(id)) {
                auto& GP = t.grad_ref(id);
                for (std::size_t i = 0; i < n; ++i) { GP.data[i] += G.data[offset + i]; }
            }
            offset += n;
        }
    });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end)
{
    auto const& A = a.value();
    require(begin <= end && end <= A.rows, "slice_rows out of range");
    Matrix C(end - begin, A.cols);
    std::copy(A.data.begin() + static_cast<std::ptrdiff_t>(begin * A.cols),
              A.data.begin() + static_cast<std::ptrdiff_t>(end * A.cols), C.data.begin());
    auto ia = a.id();
    return a.tape()->record(std::move(C), {ia}, [ia, begin](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto& GA = t.grad_ref(ia);
        auto const off = begin * GA.cols;
        for (std::size_t i = 0; i < G.size(); ++i) { GA.data[off + i] += G.data[i]; }
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end)
{
    auto const& A = a.value();
    require(begin <= end && end <= A.cols, "slice_cols out of range");
    Matrix C(A.rows, end - begin);
    for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t j = begin; j < end; ++j) { C(i, j - begin) = A(i, j); }
    }
    auto ia = a.id();
    return a.tape()->record(std::move(C), {ia}, [ia, begin](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto& GA = t.grad_ref(ia);
        for (std::size_t i = 0; i < G.rows; ++i) {
            for (std::size_t j = 0; j < G.cols; ++j) { GA(i, begin + j) += G(i, j); }
        }
    });
}

Var gather_rows(Var a, std::vector<std::size_t> const& rows)
{
    auto const& A = a.value();
    Matrix C(rows.size(), A.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] < A.rows, "gather_rows index out of range");
        std::copy_n(&A.data[rows[i] * A.cols], A.cols, &C.data[i * A.cols]);
    }
    auto ia = a.id();
    return a.tape()->record(std::move(C), {ia}, [ia, rows](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto& GA = t.grad_ref(ia);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < G.cols; ++j) { GA(rows[i], j) += G(i, j); }
        }
    });
}

Var mean_rows(Var a)
{
    auto const& A = a.value();
    require(A.rows > 0, "mean_rows of empty matrix");
    Matrix C(1, A.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t j = 0; j < A.cols; ++j) { C(0, j) += A(i, j); }
    }
    for (auto& v : C.data) { v /= static_cast<double>(A.rows); }
    auto ia = a.id();
    return a.tape()->record(std::move(C), {ia}, [ia](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto& GA = t.grad_ref(ia);
        double const inv = 1.0 / static_cast<double>(GA.rows);
        for (std::size_t i = 0; i < GA.rows; ++i) {
            for (std::size_t j = 0; j < GA.cols; ++j) { GA(i, j) += G(0, j) * inv; }
        }
    });
}

Var repeat_rows(Var row, std::size_t count)
{
    auto const& R = row.value();
    require(R.rows == 1, "repeat_rows expects a single row");
    Matrix C(count, R.cols);
    for (std::size_t i = 0; i < count; ++i) { std::copy_n(R.data.begin(), R.cols, &C.data[i * R.cols]); }
    auto ir = row.id();
    return row.tape()->record(std::move(C), {ir}, [ir](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto& GR = t.grad_ref(ir);
        for (std::size_t i = 0; i < G.rows; ++i) {
            for (std::size_t j = 0; j < G.cols; ++j) { GR(0, j) += G(i, j); }
        }
    });
}

Var reshape(Var a, std::size_t rows, std::size_t cols)
{
    Matrix C = a.value();
    require(rows * cols == C.size(), "reshape size mismatch");
    C.rows = rows;
    C.cols = cols;
    auto ia = a.id();
    return a.tape()->record(std::move(C), {ia}, [ia](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto& GA = t.grad_ref(ia);
        for (std::size_t i = 0; i < G.size(); ++i) { GA.data[i] += G.data[i]; }
    });
}

Var softmax_rows(Var a, Mask const* mask)
{
    auto const& A = a.value();
    require(mask == nullptr || mask->size() == A.size(), "softmax mask shape mismatch");
    Matrix P(A.rows, A.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < A.cols; ++j) {
            if (mask != nullptr && (*mask)[i * A.cols + j] != 0) { continue; }
            mx = std::max(mx, A(i, j));
        }
        if (!std::isfinite(mx)) { continue; }
        double total = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) {
            if (mask != nullptr && (*mask)[i * A.cols + j] != 0) { continue; }
            P(i, j) = std::exp(A(i, j) - mx);
            total += P(i, j);
        }
        for (std::size_t j = 0; j < A.cols; ++j) { P(i, j) /= total; }
    }
    auto ia = a.id();
    return a.tape()->record(std::move(P), {ia}, [ia](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto const& P = t.value(self);
        auto& GA = t.grad_ref(ia);
        for (std::size_t i = 0; i < P.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < P.cols; ++j) { dot += G(i, j) * P(i, j); }
            for (std::size_t j = 0; j < P.cols; ++j) { GA(i, j) += P(i, j) * (G(i, j) - dot); }
        }
    });
}

Var normalize_rows(Var a, Var gamma, Var beta, double eps)
{
    auto const& A = a.value();
    require(A.rows > 0, "normalize_rows of empty matrix");
    require(gamma.rows() == 1 && gamma.cols() == A.cols && beta.rows() == 1 && beta.cols() == A.cols,
            "normalize_rows affine shape mismatch");
    std::size_t const n = A.rows;
    std::size_t const m = A.cols;
    Matrix xhat(n, m);
    std::vector<double> inv_std(m);
    for (std::size_t j = 0; j < m; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) { mean += A(i, j); }
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) { var += (A(i, j) - mean) * (A(i, j) - mean); }
        var /= static_cast<double>(n);
        inv_std[j] = 1.0 / std::sqrt(var + eps);
        for (std::size_t i = 0; i < n; ++i) { xhat(i, j) = (A(i, j) - mean) * inv_std[j]; }
    }
    auto const& g = gamma.value();
    auto const& b = beta.value();
    Matrix Y(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) { Y(i, j) = g(0, j) * xhat(i, j) + b(0, j); }
    }
    auto ia = a.id();
    auto ig = gamma.id();
    auto ib = beta.id();
    return a.tape()->record(std::move(Y), {ia, ig, ib},
                            [ia, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto const n = G.rows;
        auto const m = G.cols;
        if (t.tracks(ig)) {
            auto& GG = t.grad_ref(ig);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < m; ++j) { GG(0, j) += G(i, j) * xhat(i, j); }
            }
        }
        if (t.tracks(ib)) {
            auto& GB = t.grad_ref(ib);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < m; ++j) { GB(0, j) += G(i, j); }
            }
        }
        if (t.tracks(ia)) {
            auto const& gam = t.value(ig);
            auto& GA = t.grad_ref(ia);
            double const inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t j = 0; j < m; ++j) {
                double sum_d = 0.0;
                double sum_dx = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double const d = G(i, j) * gam(0, j);
                    sum_d += d;
                    sum_dx += d * xhat(i, j);
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double const d = G(i, j) * gam(0, j);
                    GA(i, j) += inv_std[j] * (d - inv_n * sum_d - xhat(i, j) * inv_n * sum_dx);
                }
            }
        }
    });
}

Var log_softmax_pick(Var logits, Mask const& mask, std::vector<int> const& actions,
                     std::vector<std::uint8_t> const& active)
{
    auto const& A = logits.value();
    require(mask.size() == A.size() && actions.size() == A.rows && active.size() == A.rows,
            "log_softmax_pick shape mismatch");
    Matrix out(A.rows, 1);
    Matrix probs(A.rows, A.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        if (active[i] == 0) { continue; }
        auto const a = static_cast<std::size_t>(actions[i]);
        require(a < A.cols && mask[i * A.cols + a] == 0, "picked action is masked");
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < A.cols; ++j) {
            if (mask[i * A.cols + j] == 0) { mx = std::max(mx, A(i, j)); }
        }
        double total = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) {
            if (mask[i * A.cols + j] == 0) {
                probs(i, j) = std::exp(A(i, j) - mx);
                total += probs(i, j);
            }
        }
        for (std::size_t j = 0; j < A.cols; ++j) { probs(i, j) /= total; }
        out(i, 0) = A(i, a) - mx - std::log(total);
    }
    auto il = logits.id();
    return logits.tape()->record(std::move(out), {il},
                                 [il, actions, active, probs = std::move(probs)](Tape& t, std::size_t self) {
        auto const& G = t.grad(self);
        auto& GL = t.grad_ref(il);
        for (std::size_t i = 0; i < probs.rows; ++i) {
            if (active[i] == 0) { continue; }
            double const g = G(i, 0);
            for (std::size_t j = 0; j < probs.cols; ++j) { GL(i, j) -= g * probs(i, j); }
            GL(i, static_cast<std::size_t>(actions[i])) += g;
        }
    });
}

Var weighted_sum(Var column, std::vector<double> const& coeff)
{
    auto const& A = column.value();
    require(A.cols == 1 && coeff.size() == A.rows, "weighted_sum shape mismatch");
    Matrix C(1, 1);
    for (std::size_t i = 0; i < A.rows; ++i) { C(0, 0) += coeff[i] * A(i, 0); }
    auto ia = column.id();
    return column.tape()->record(std::move(C), {ia}, [ia, coeff](Tape& t, std::size_t self) {
        double const g = t.grad(self)(0, 0);
        auto& GA = t.grad_ref(ia);
        for (std::size_t i = 0; i < coeff.size(); ++i) { GA(i, 0) += g * coeff[i]; }
    });
}

Var sum(Var a)
{
    Matrix C(1, 1);
    for (double v : a.value().data) { C(0, 0) += v; }
    auto ia = a.id();
    return a.tape()->record(std::move(C), {ia}, [ia](Tape& t, std::size_t self) {
        double const g = t.grad(self)(0, 0);
        auto& GA = t.grad_ref(ia);
        for (auto& v : GA.data) { v += g; }
    });
}

} // namespace nhde::ad
