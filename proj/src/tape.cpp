#include "aft/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace aft::ad {

namespace {

const char* op_name(Op op) {
    switch (op) {
        case Op::kInput: return "input";
        case Op::kMatmul: return "matmul";
        case Op::kAdd: return "add";
        case Op::kAddBias: return "add_broadcast_bias";
        case Op::kConv3x3: return "conv2d_3x3_same";
        case Op::kRelu: return "relu";
        case Op::kGelu: return "gelu";
        case Op::kSoftmaxRows: return "softmax_rows";
        case Op::kLayerNorm: return "layer_norm_lastdim";
        case Op::kReshape: return "reshape";
        case Op::kTranspose: return "transpose";
        case Op::kConcatLast: return "concat_lastdim";
        case Op::kSplitHeads: return "split_heads";
        case Op::kScale: return "scale";
        case Op::kSumAll: return "sum_all";
        case Op::kMse: return "mse";
    }
    return "?";
}

[[noreturn]] void shape_error(Op op, const std::string& detail) {
    throw std::invalid_argument(std::string(op_name(op)) + ": " + detail);
}

// Any non-finite entry drives the sum non-finite, so one reduction flags the
// whole tensor without a per-entry branch.
void check_finite(const Tensor& t, Op op) {
    double s = 0.0;
    const double* p = t.ptr();
    for (int64_t i = 0; i < t.numel(); ++i) s += p[i];
    if (!std::isfinite(s)) {
        // Distinguish a genuine non-finite entry from benign sum overflow.
        for (int64_t i = 0; i < t.numel(); ++i)
            if (!std::isfinite(p[i]))
                throw std::runtime_error(std::string("non-finite value produced by ") +
                                         op_name(op));
    }
}

constexpr double kLnEps = 1e-5;  // layer_norm variance epsilon
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

int64_t rows_of(const Tensor& t) { return t.numel() / t.shape.back(); }

thread_local std::vector<double> g_col;   // conv im2col scratch
thread_local std::vector<double> g_tmp;   // small per-op scratch

// col[(c*9 + (dy+1)*3 + (dx+1)) * (H*W) + i*W + j] = x[c, i+dy, j+dx] (0 outside)
void im2col_3x3(const double* x, int64_t C, int64_t H, int64_t W, double* col) {
    const int64_t hw = H * W;
    for (int64_t c = 0; c < C; ++c) {
        const double* xc = x + c * hw;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                double* row = col + (c * 9 + (dy + 1) * 3 + (dx + 1)) * hw;
                for (int64_t i = 0; i < H; ++i) {
                    const int64_t si = i + dy;
                    double* out = row + i * W;
                    if (si < 0 || si >= H) {
                        std::memset(out, 0, static_cast<size_t>(W) * sizeof(double));
                        continue;
                    }
                    const double* src = xc + si * W;
                    const int64_t j0 = dx < 0 ? 1 : 0;
                    const int64_t j1 = dx > 0 ? W - 1 : W;
                    if (j0 > 0) out[0] = 0.0;
                    if (j1 < W) out[W - 1] = 0.0;
                    std::memcpy(out + j0, src + j0 + dx,
                                static_cast<size_t>(j1 - j0) * sizeof(double));
                }
            }
    }
}

// Transposed scatter of im2col: dx[c, i+dy, j+dx] += col[...]
void col2im_3x3(const double* col, int64_t C, int64_t H, int64_t W, double* dx) {
    const int64_t hw = H * W;
    for (int64_t c = 0; c < C; ++c) {
        double* xc = dx + c * hw;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx_ = -1; dx_ <= 1; ++dx_) {
                const double* row = col + (c * 9 + (dy + 1) * 3 + (dx_ + 1)) * hw;
                for (int64_t i = 0; i < H; ++i) {
                    const int64_t si = i + dy;
                    if (si < 0 || si >= H) continue;
                    const double* src = row + i * W;
                    double* out = xc + si * W;
                    const int64_t j0 = dx_ < 0 ? 1 : 0;
                    const int64_t j1 = dx_ > 0 ? W - 1 : W;
                    for (int64_t j = j0; j < j1; ++j) out[j + dx_] += src[j];
                }
            }
    }
}

}  // namespace

NodeId Tape::push(Node&& n) {
    if (n.op != Op::kInput) check_finite(n.value, n.op);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::input(const Tensor& value, bool requires_grad) {
    Node n;
    n.op = Op::kInput;
    n.value = value;
    n.needs_grad = requires_grad;
    check_finite(n.value, Op::kInput);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.ndim() != 2 || B.ndim() != 2)
        shape_error(Op::kMatmul, "expects 2-D operands, got " + A.shape_str() + " and " +
                                     B.shape_str());
    if (A.dim(1) != B.dim(0))
        shape_error(Op::kMatmul, "inner dims disagree: " + A.shape_str() + " vs " + B.shape_str());
    const int64_t m = A.dim(0), k = A.dim(1), nn = B.dim(1);
    Node n;
    n.op = Op::kMatmul;
    n.in = {a, b, -1};
    n.needs_grad = at(a).needs_grad || at(b).needs_grad;
    n.value = Tensor({m, nn});
    kern::gemm_nn(m, k, nn, A.ptr(), k, B.ptr(), nn, n.value.ptr(), nn, false);
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B))
        shape_error(Op::kAdd, "shapes differ: " + A.shape_str() + " vs " + B.shape_str());
    Node n;
    n.op = Op::kAdd;
    n.in = {a, b, -1};
    n.needs_grad = at(a).needs_grad || at(b).needs_grad;
    n.value = Tensor(A.shape);
    for (int64_t i = 0; i < A.numel(); ++i) n.value.data[i] = A.data[i] + B.data[i];
    return push(std::move(n));
}

NodeId Tape::add_broadcast_bias(NodeId a, NodeId bias) {
    const Tensor& A = value(a);
    const Tensor& B = value(bias);
    if (B.ndim() != 1 || B.numel() != A.shape.back())
        shape_error(Op::kAddBias, "bias " + B.shape_str() + " does not match last dim of " +
                                      A.shape_str());
    const int64_t cols = A.shape.back();
    const int64_t rows = rows_of(A);
    Node n;
    n.op = Op::kAddBias;
    n.in = {a, bias, -1};
    n.needs_grad = at(a).needs_grad || at(bias).needs_grad;
    n.value = Tensor(A.shape);
    for (int64_t r = 0; r < rows; ++r) {
        const double* src = A.ptr() + r * cols;
        double* dst = n.value.ptr() + r * cols;
        for (int64_t j = 0; j < cols; ++j) dst[j] = src[j] + B.data[j];
    }
    return push(std::move(n));
}

NodeId Tape::conv2d_3x3_same(NodeId x, NodeId w, NodeId b) {
    const Tensor& X = value(x);
    const Tensor& W = value(w);
    const Tensor& B = value(b);
    if (X.ndim() != 3) shape_error(Op::kConv3x3, "input must be [C,H,W], got " + X.shape_str());
    if (W.ndim() != 4 || W.dim(2) != 3 || W.dim(3) != 3)
        shape_error(Op::kConv3x3, "weight must be [Co,Ci,3,3], got " + W.shape_str());
    if (W.dim(1) != X.dim(0))
        shape_error(Op::kConv3x3, "weight Ci " + W.shape_str() + " does not match input " +
                                      X.shape_str());
    if (B.ndim() != 1 || B.numel() != W.dim(0))
        shape_error(Op::kConv3x3, "bias must be [Co], got " + B.shape_str());
    const int64_t C = X.dim(0), H = X.dim(1), Wd = X.dim(2), Co = W.dim(0);
    const int64_t hw = H * Wd, ck = C * 9;

    Node n;
    n.op = Op::kConv3x3;
    n.in = {x, w, b};
    n.needs_grad = at(x).needs_grad || at(w).needs_grad || at(b).needs_grad;
    n.value = Tensor({Co, H, Wd});

    g_col.resize(static_cast<size_t>(ck * hw));
    im2col_3x3(X.ptr(), C, H, Wd, g_col.data());
    kern::gemm_nn(Co, ck, hw, W.ptr(), ck, g_col.data(), hw, n.value.ptr(), hw, false);
    for (int64_t co = 0; co < Co; ++co) {
        double* out = n.value.ptr() + co * hw;
        const double bv = B.data[co];
        for (int64_t i = 0; i < hw; ++i) out[i] += bv;
    }
    return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
    const Tensor& A = value(a);
    Node n;
    n.op = Op::kRelu;
    n.in = {a, -1, -1};
    n.needs_grad = at(a).needs_grad;
    n.value = Tensor(A.shape);
    for (int64_t i = 0; i < A.numel(); ++i) n.value.data[i] = A.data[i] > 0.0 ? A.data[i] : 0.0;
    return push(std::move(n));
}

NodeId Tape::gelu(NodeId a) {
    const Tensor& A = value(a);
    Node n;
    n.op = Op::kGelu;
    n.in = {a, -1, -1};
    n.needs_grad = at(a).needs_grad;
    n.value = Tensor(A.shape);
    n.saved = Tensor(A.shape);  // Phi(x), reused by backward
    for (int64_t i = 0; i < A.numel(); ++i) {
        const double phi = 0.5 * (1.0 + std::erf(A.data[i] * kInvSqrt2));
        n.saved.data[i] = phi;
        n.value.data[i] = A.data[i] * phi;
    }
    return push(std::move(n));
}

NodeId Tape::softmax_rows(NodeId a) {
    const Tensor& A = value(a);
    const int64_t cols = A.shape.back();
    const int64_t rows = rows_of(A);
    Node n;
    n.op = Op::kSoftmaxRows;
    n.in = {a, -1, -1};
    n.needs_grad = at(a).needs_grad;
    n.value = Tensor(A.shape);
    g_tmp.resize(static_cast<size_t>(cols));
    for (int64_t r = 0; r < rows; ++r) {
        const double* x = A.ptr() + r * cols;
        double* y = n.value.ptr() + r * cols;
        double m = x[0];
        for (int64_t j = 1; j < cols; ++j) m = x[j] > m ? x[j] : m;
        for (int64_t j = 0; j < cols; ++j) g_tmp[static_cast<size_t>(j)] = x[j] - m;
        kern::exp_vec(g_tmp.data(), y, cols);
        double s = 0.0;
        for (int64_t j = 0; j < cols; ++j) s += y[j];
        const double inv = 1.0 / s;
        for (int64_t j = 0; j < cols; ++j) y[j] *= inv;
    }
    return push(std::move(n));
}

NodeId Tape::layer_norm_lastdim(NodeId a, NodeId gain, NodeId shift) {
    const Tensor& A = value(a);
    const Tensor& G = value(gain);
    const Tensor& S = value(shift);
    const int64_t cols = A.shape.back();
    if (G.ndim() != 1 || G.numel() != cols || S.ndim() != 1 || S.numel() != cols)
        shape_error(Op::kLayerNorm, "gain/shift must be [" + std::to_string(cols) + "], got " +
                                        G.shape_str() + " and " + S.shape_str());
    const int64_t rows = rows_of(A);
    Node n;
    n.op = Op::kLayerNorm;
    n.in = {a, gain, shift};
    n.needs_grad = at(a).needs_grad || at(gain).needs_grad || at(shift).needs_grad;
    n.value = Tensor(A.shape);
    n.saved = Tensor({rows, 2});  // per-row mean and reciprocal stddev
    for (int64_t r = 0; r < rows; ++r) {
        const double* x = A.ptr() + r * cols;
        double* y = n.value.ptr() + r * cols;
        double mean = 0.0;
        for (int64_t j = 0; j < cols; ++j) mean += x[j];
        mean /= static_cast<double>(cols);
        double var = 0.0;
        for (int64_t j = 0; j < cols; ++j) var += (x[j] - mean) * (x[j] - mean);
        var /= static_cast<double>(cols);
        const double rstd = 1.0 / std::sqrt(var + kLnEps);
        n.saved.data[2 * r] = mean;
        n.saved.data[2 * r + 1] = rstd;
        for (int64_t j = 0; j < cols; ++j) y[j] = (x[j] - mean) * rstd * G.data[j] + S.data[j];
    }
    return push(std::move(n));
}

NodeId Tape::reshape(NodeId a, std::vector<int64_t> shape) {
    const Tensor& A = value(a);
    if (Tensor::numel_of(shape) != A.numel())
        shape_error(Op::kReshape, "cannot reshape " + A.shape_str() + " to " +
                                      Tensor::shape_str(shape));
    Node n;
    n.op = Op::kReshape;
    n.in = {a, -1, -1};
    n.needs_grad = at(a).needs_grad;
    n.value = Tensor(std::move(shape), A.data);
    return push(std::move(n));
}

NodeId Tape::transpose(NodeId a, std::vector<int> perm) {
    const Tensor& A = value(a);
    const int nd = A.ndim();
    if (perm.empty()) {
        if (nd != 2) shape_error(Op::kTranspose, "default transpose needs 2-D, got " + A.shape_str());
        perm = {1, 0};
    }
    if (static_cast<int>(perm.size()) != nd)
        shape_error(Op::kTranspose, "permutation length does not match rank of " + A.shape_str());
    std::vector<bool> seen(static_cast<size_t>(nd), false);
    for (int p : perm) {
        if (p < 0 || p >= nd || seen[static_cast<size_t>(p)])
            shape_error(Op::kTranspose, "invalid permutation");
        seen[static_cast<size_t>(p)] = true;
    }

    std::vector<int64_t> out_shape(static_cast<size_t>(nd));
    for (int i = 0; i < nd; ++i) out_shape[static_cast<size_t>(i)] = A.dim(perm[static_cast<size_t>(i)]);

    Node n;
    n.op = Op::kTranspose;
    n.in = {a, -1, -1};
    n.needs_grad = at(a).needs_grad;
    n.perm = perm;
    n.value = Tensor(out_shape);

    // in strides
    std::vector<int64_t> istr(static_cast<size_t>(nd), 1);
    for (int i = nd - 2; i >= 0; --i)
        istr[static_cast<size_t>(i)] = istr[static_cast<size_t>(i + 1)] * A.dim(i + 1);
    // stride in the input for each output axis
    std::vector<int64_t> map(static_cast<size_t>(nd));
    for (int i = 0; i < nd; ++i) map[static_cast<size_t>(i)] = istr[static_cast<size_t>(perm[static_cast<size_t>(i)])];

    std::vector<int64_t> idx(static_cast<size_t>(nd), 0);
    const double* src = A.ptr();
    double* dst = n.value.ptr();
    const int64_t total = A.numel();
    int64_t src_off = 0;
    for (int64_t o = 0; o < total; ++o) {
        dst[o] = src[src_off];
        for (int d = nd - 1; d >= 0; --d) {
            const size_t dd = static_cast<size_t>(d);
            src_off += map[dd];
            if (++idx[dd] < out_shape[dd]) break;
            src_off -= map[dd] * out_shape[dd];
            idx[dd] = 0;
        }
    }
    return push(std::move(n));
}

NodeId Tape::concat_lastdim(const std::vector<NodeId>& parts) {
    if (parts.empty()) shape_error(Op::kConcatLast, "needs at least one input");
    const Tensor& first = value(parts[0]);
    std::vector<int64_t> lead(first.shape.begin(), first.shape.end() - 1);
    int64_t total_cols = 0;
    bool needs = false;
    for (NodeId p : parts) {
        const Tensor& T = value(p);
        if (T.ndim() != first.ndim() ||
            !std::equal(lead.begin(), lead.end(), T.shape.begin()))
            shape_error(Op::kConcatLast, "leading dims differ: " + first.shape_str() + " vs " +
                                             T.shape_str());
        total_cols += T.shape.back();
        needs = needs || at(p).needs_grad;
    }
    std::vector<int64_t> out_shape = lead;
    out_shape.push_back(total_cols);

    Node n;
    n.op = Op::kConcatLast;
    n.var_in = parts;
    n.needs_grad = needs;
    n.value = Tensor(out_shape);
    const int64_t rows = n.value.numel() / total_cols;
    int64_t col_off = 0;
    for (NodeId p : parts) {
        const Tensor& T = value(p);
        const int64_t c = T.shape.back();
        for (int64_t r = 0; r < rows; ++r)
            std::memcpy(n.value.ptr() + r * total_cols + col_off, T.ptr() + r * c,
                        static_cast<size_t>(c) * sizeof(double));
        col_off += c;
    }
    return push(std::move(n));
}

NodeId Tape::split_heads(NodeId a, int n_heads, int head) {
    const Tensor& A = value(a);
    const int64_t cols = A.shape.back();
    if (n_heads <= 0 || cols % n_heads != 0)
        shape_error(Op::kSplitHeads, "last dim of " + A.shape_str() + " not divisible into " +
                                         std::to_string(n_heads) + " heads");
    if (head < 0 || head >= n_heads) shape_error(Op::kSplitHeads, "head index out of range");
    const int64_t hc = cols / n_heads;
    const int64_t rows = rows_of(A);

    Node n;
    n.op = Op::kSplitHeads;
    n.in = {a, -1, -1};
    n.needs_grad = at(a).needs_grad;
    n.heads_n = n_heads;
    n.heads_i = head;
    std::vector<int64_t> out_shape = A.shape;
    out_shape.back() = hc;
    n.value = Tensor(out_shape);
    for (int64_t r = 0; r < rows; ++r)
        std::memcpy(n.value.ptr() + r * hc, A.ptr() + r * cols + head * hc,
                    static_cast<size_t>(hc) * sizeof(double));
    return push(std::move(n));
}

NodeId Tape::merge_heads(const std::vector<NodeId>& heads) { return concat_lastdim(heads); }

NodeId Tape::scale(NodeId a, double c) {
    const Tensor& A = value(a);
    Node n;
    n.op = Op::kScale;
    n.in = {a, -1, -1};
    n.needs_grad = at(a).needs_grad;
    n.scalar = c;
    n.value = Tensor(A.shape);
    for (int64_t i = 0; i < A.numel(); ++i) n.value.data[i] = c * A.data[i];
    return push(std::move(n));
}

NodeId Tape::sum_all(NodeId a) {
    const Tensor& A = value(a);
    Node n;
    n.op = Op::kSumAll;
    n.in = {a, -1, -1};
    n.needs_grad = at(a).needs_grad;
    double s = 0.0;
    for (int64_t i = 0; i < A.numel(); ++i) s += A.data[i];
    n.value = Tensor({1}, {s});
    return push(std::move(n));
}

NodeId Tape::mse(NodeId pred, NodeId target) {
    const Tensor& P = value(pred);
    const Tensor& T = value(target);
    if (!P.same_shape(T))
        shape_error(Op::kMse, "shapes differ: " + P.shape_str() + " vs " + T.shape_str());
    Node n;
    n.op = Op::kMse;
    n.in = {pred, target, -1};
    n.needs_grad = at(pred).needs_grad || at(target).needs_grad;
    double s = 0.0;
    for (int64_t i = 0; i < P.numel(); ++i) {
        const double d = P.data[i] - T.data[i];
        s += d * d;
    }
    n.value = Tensor({1}, {s / static_cast<double>(P.numel())});
    return push(std::move(n));
}

const Tensor& Tape::grad(NodeId id) const {
    const Node& n = at(id);
    if (n.grad.numel() == 0)
        throw std::logic_error("no gradient on node; run backward over a connected loss first");
    return n.grad;
}

bool Tape::has_grad(NodeId id) const { return at(id).grad.numel() != 0; }

Tensor& Tape::ensure_grad(NodeId id) {
    Node& n = at(id);
    if (n.grad.numel() == 0) n.grad = Tensor(n.value.shape);
    return n.grad;
}

void Tape::backward(NodeId loss) {
    if (value(loss).numel() != 1)
        throw std::invalid_argument("backward needs a scalar loss, got " +
                                    value(loss).shape_str());
    for (Node& n : nodes_) n.grad = Tensor{};
    ensure_grad(loss).data[0] = 1.0;
    for (NodeId id = loss; id >= 0; --id) {
        Node& n = at(id);
        if (n.grad.numel() == 0 || n.op == Op::kInput || !n.needs_grad) continue;
        backward_node(id);
    }
}

void Tape::backward_node(NodeId id) {
    Node& n = at(id);
    const Tensor& gy = n.grad;
    switch (n.op) {
        case Op::kMatmul: {
            const Tensor& A = value(n.in[0]);
            const Tensor& B = value(n.in[1]);
            const int64_t m = A.dim(0), k = A.dim(1), nn = B.dim(1);
            if (at(n.in[0]).needs_grad) {
                Tensor& ga = ensure_grad(n.in[0]);
                kern::gemm_nt(m, nn, k, gy.ptr(), nn, B.ptr(), nn, ga.ptr(), k, true);
            }
            if (at(n.in[1]).needs_grad) {
                Tensor& gb = ensure_grad(n.in[1]);
                kern::gemm_tn(k, m, nn, A.ptr(), k, gy.ptr(), nn, gb.ptr(), nn, true);
            }
            break;
        }
        case Op::kAdd: {
            for (int s = 0; s < 2; ++s) {
                if (!at(n.in[s]).needs_grad) continue;
                Tensor& g = ensure_grad(n.in[s]);
                kern::axpy(gy.numel(), 1.0, gy.ptr(), g.ptr());
            }
            break;
        }
        case Op::kAddBias: {
            const int64_t cols = gy.shape.back();
            const int64_t rows = rows_of(gy);
            if (at(n.in[0]).needs_grad)
                kern::axpy(gy.numel(), 1.0, gy.ptr(), ensure_grad(n.in[0]).ptr());
            if (at(n.in[1]).needs_grad) {
                Tensor& gb = ensure_grad(n.in[1]);
                for (int64_t r = 0; r < rows; ++r)
                    kern::axpy(cols, 1.0, gy.ptr() + r * cols, gb.ptr());
            }
            break;
        }
        case Op::kConv3x3: {
            const Tensor& X = value(n.in[0]);
            const Tensor& W = value(n.in[1]);
            const int64_t C = X.dim(0), H = X.dim(1), Wd = X.dim(2), Co = W.dim(0);
            const int64_t hw = H * Wd, ck = C * 9;
            if (at(n.in[1]).needs_grad) {
                // dW[Co, C*9] += dY[Co, hw] * col[ck, hw]^T
                g_col.resize(static_cast<size_t>(ck * hw));
                im2col_3x3(X.ptr(), C, H, Wd, g_col.data());
                Tensor& gw = ensure_grad(n.in[1]);
                kern::gemm_nt(Co, hw, ck, gy.ptr(), hw, g_col.data(), hw, gw.ptr(), ck, true);
            }
            if (at(n.in[2]).needs_grad) {
                Tensor& gb = ensure_grad(n.in[2]);
                for (int64_t co = 0; co < Co; ++co) {
                    const double* row = gy.ptr() + co * hw;
                    double s = 0.0;
                    for (int64_t i = 0; i < hw; ++i) s += row[i];
                    gb.data[co] += s;
                }
            }
            if (at(n.in[0]).needs_grad) {
                // dcol[ck, hw] = W[Co, ck]^T * dY[Co, hw]; then scatter to dX
                g_col.resize(static_cast<size_t>(ck * hw));
                kern::gemm_tn(ck, Co, hw, W.ptr(), ck, gy.ptr(), hw, g_col.data(), hw, false);
                col2im_3x3(g_col.data(), C, H, Wd, ensure_grad(n.in[0]).ptr());
            }
            break;
        }
        case Op::kRelu: {
            if (!at(n.in[0]).needs_grad) break;
            const Tensor& X = value(n.in[0]);
            Tensor& gx = ensure_grad(n.in[0]);
            for (int64_t i = 0; i < gy.numel(); ++i)
                if (X.data[i] > 0.0) gx.data[i] += gy.data[i];
            break;
        }
        case Op::kGelu: {
            if (!at(n.in[0]).needs_grad) break;
            const Tensor& X = value(n.in[0]);
            Tensor& gx = ensure_grad(n.in[0]);
            g_tmp.resize(static_cast<size_t>(gy.numel()));
            // density term: x * phi(x) with phi the standard normal pdf
            for (int64_t i = 0; i < gy.numel(); ++i)
                g_tmp[static_cast<size_t>(i)] = -0.5 * X.data[i] * X.data[i];
            kern::exp_vec(g_tmp.data(), g_tmp.data(), gy.numel());
            for (int64_t i = 0; i < gy.numel(); ++i) {
                const double phi = n.saved.data[i];
                const double pdf = kInvSqrt2Pi * g_tmp[static_cast<size_t>(i)];
                gx.data[i] += gy.data[i] * (phi + X.data[i] * pdf);
            }
            break;
        }
        case Op::kSoftmaxRows: {
            if (!at(n.in[0]).needs_grad) break;
            const Tensor& Y = n.value;
            Tensor& gx = ensure_grad(n.in[0]);
            const int64_t cols = Y.shape.back();
            const int64_t rows = rows_of(Y);
            for (int64_t r = 0; r < rows; ++r) {
                const double* y = Y.ptr() + r * cols;
                const double* dy = gy.ptr() + r * cols;
                double* dx = gx.ptr() + r * cols;
                const double dot = kern::dot(dy, y, cols);
                for (int64_t j = 0; j < cols; ++j) dx[j] += (dy[j] - dot) * y[j];
            }
            break;
        }
        case Op::kLayerNorm: {
            const Tensor& X = value(n.in[0]);
            const Tensor& G = value(n.in[1]);
            const int64_t cols = X.shape.back();
            const int64_t rows = rows_of(X);
            const bool need_x = at(n.in[0]).needs_grad;
            const bool need_g = at(n.in[1]).needs_grad;
            const bool need_s = at(n.in[2]).needs_grad;
            Tensor* gx = need_x ? &ensure_grad(n.in[0]) : nullptr;
            Tensor* gg = need_g ? &ensure_grad(n.in[1]) : nullptr;
            Tensor* gs = need_s ? &ensure_grad(n.in[2]) : nullptr;
            for (int64_t r = 0; r < rows; ++r) {
                const double mean = n.saved.data[2 * r];
                const double rstd = n.saved.data[2 * r + 1];
                const double* x = X.ptr() + r * cols;
                const double* dy = gy.ptr() + r * cols;
                double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                for (int64_t j = 0; j < cols; ++j) {
                    const double xhat = (x[j] - mean) * rstd;
                    const double dxhat = dy[j] * G.data[j];
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xhat;
                    if (gg) gg->data[j] += dy[j] * xhat;
                    if (gs) gs->data[j] += dy[j];
                }
                if (gx) {
                    const double inv_n = 1.0 / static_cast<double>(cols);
                    double* dx = gx->ptr() + r * cols;
                    for (int64_t j = 0; j < cols; ++j) {
                        const double xhat = (x[j] - mean) * rstd;
                        const double dxhat = dy[j] * G.data[j];
                        dx[j] += rstd * (dxhat - inv_n * sum_dxhat - xhat * inv_n * sum_dxhat_xhat);
                    }
                }
            }
            break;
        }
        case Op::kReshape: {
            if (!at(n.in[0]).needs_grad) break;
            Tensor& gx = ensure_grad(n.in[0]);
            kern::axpy(gy.numel(), 1.0, gy.ptr(), gx.ptr());
            break;
        }
        case Op::kTranspose: {
            if (!at(n.in[0]).needs_grad) break;
            Tensor& gx = ensure_grad(n.in[0]);
            const int nd = static_cast<int>(n.perm.size());
            // walk output linearly, scatter-add into the input offset
            const Tensor& A = value(n.in[0]);
            std::vector<int64_t> istr(static_cast<size_t>(nd), 1);
            for (int i = nd - 2; i >= 0; --i)
                istr[static_cast<size_t>(i)] = istr[static_cast<size_t>(i + 1)] * A.dim(i + 1);
            std::vector<int64_t> map(static_cast<size_t>(nd));
            for (int i = 0; i < nd; ++i)
                map[static_cast<size_t>(i)] = istr[static_cast<size_t>(n.perm[static_cast<size_t>(i)])];
            std::vector<int64_t> idx(static_cast<size_t>(nd), 0);
            int64_t src_off = 0;
            const int64_t total = gy.numel();
            for (int64_t o = 0; o < total; ++o) {
                gx.data[src_off] += gy.data[o];
                for (int d = nd - 1; d >= 0; --d) {
                    const size_t dd = static_cast<size_t>(d);
                    src_off += map[dd];
                    if (++idx[dd] < n.value.dim(d)) break;
                    src_off -= map[dd] * n.value.dim(d);
                    idx[dd] = 0;
                }
            }
            break;
        }
        case Op::kConcatLast: {
            const int64_t total_cols = n.value.shape.back();
            const int64_t rows = n.value.numel() / total_cols;
            int64_t col_off = 0;
            for (NodeId p : n.var_in) {
                const int64_t c = value(p).shape.back();
                if (at(p).needs_grad) {
                    Tensor& gp = ensure_grad(p);
                    for (int64_t r = 0; r < rows; ++r)
                        kern::axpy(c, 1.0, gy.ptr() + r * total_cols + col_off,
                                   gp.ptr() + r * c);
                }
                col_off += c;
            }
            break;
        }
        case Op::kSplitHeads: {
            if (!at(n.in[0]).needs_grad) break;
            Tensor& gx = ensure_grad(n.in[0]);
            const int64_t cols = value(n.in[0]).shape.back();
            const int64_t hc = n.value.shape.back();
            const int64_t rows = rows_of(n.value);
            for (int64_t r = 0; r < rows; ++r)
                kern::axpy(hc, 1.0, gy.ptr() + r * hc, gx.ptr() + r * cols + n.heads_i * hc);
            break;
        }
        case Op::kScale: {
            if (!at(n.in[0]).needs_grad) break;
            kern::axpy(gy.numel(), n.scalar, gy.ptr(), ensure_grad(n.in[0]).ptr());
            break;
        }
        case Op::kSumAll: {
            if (!at(n.in[0]).needs_grad) break;
            Tensor& gx = ensure_grad(n.in[0]);
            const double g0 = gy.data[0];
            for (int64_t i = 0; i < gx.numel(); ++i) gx.data[i] += g0;
            break;
        }
        case Op::kMse: {
            if (!at(n.in[0]).needs_grad && !at(n.in[1]).needs_grad) break;
            const Tensor& P = value(n.in[0]);
            const Tensor& T = value(n.in[1]);
            const double c = 2.0 * gy.data[0] / static_cast<double>(P.numel());
            if (at(n.in[0]).needs_grad) {
                Tensor& gp = ensure_grad(n.in[0]);
                for (int64_t i = 0; i < P.numel(); ++i)
                    gp.data[i] += c * (P.data[i] - T.data[i]);
            }
            if (at(n.in[1]).needs_grad) {
                Tensor& gt = ensure_grad(n.in[1]);
                for (int64_t i = 0; i < P.numel(); ++i)
                    gt.data[i] -= c * (P.data[i] - T.data[i]);
            }
            break;
        }
        case Op::kInput:
            break;
    }
}

void Tape::set_input(NodeId id, const Tensor& value) {
    Node& n = at(id);
    if (n.op != Op::kInput) throw std::logic_error("set_input: node is not a leaf");
    if (!n.value.same_shape(value))
        throw std::invalid_argument("set_input: shape " + value.shape_str() +
                                    " does not match node shape " + n.value.shape_str());
    check_finite(value, Op::kInput);
    n.value.data = value.data;
}

void Tape::truncate(int64_t n) {
    if (n < 0 || n > size()) throw std::out_of_range("truncate: bad node count");
    nodes_.resize(static_cast<size_t>(n));
}

void Tape::clear() { nodes_.clear(); }

}  // namespace aft::ad
