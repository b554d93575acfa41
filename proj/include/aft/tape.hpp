// Reverse-mode automatic differentiation on dense double tensors. Ops execute
// eagerly and record themselves on a tape; backward() walks the tape in
// reverse creation order (reverse-topological by construction) and sums
// gradients over fan-out. Every op's output is checked finite immediately.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "aft/tensor.hpp"

namespace aft::ad {

using NodeId = int32_t;

enum class Op : uint8_t {
    kInput,
    kMatmul,
    kAdd,
    kAddBias,
    kConv3x3,
    kRelu,
    kGelu,
    kSoftmaxRows,
    kLayerNorm,
    kReshape,
    kTranspose,
    kConcatLast,
    kSplitHeads,
    kScale,
    kSumAll,
    kMse,
};

class Tape {
public:
    // Registers a leaf. Parameters pass requires_grad = true; data does not.
    NodeId input(const Tensor& value, bool requires_grad = false);

    // [m x k] * [k x n] -> [m x n]
    NodeId matmul(NodeId a, NodeId b);
    // elementwise, same shape
    NodeId add(NodeId a, NodeId b);
    // a[..., n] + bias[n], bias broadcast across leading dims
    NodeId add_broadcast_bias(NodeId a, NodeId bias);
    // x[C,H,W] (*) w[Co,C,3,3] + b[Co], zero padding, stride 1 -> [Co,H,W]
    NodeId conv2d_3x3_same(NodeId x, NodeId w, NodeId b);
    NodeId relu(NodeId a);
    // exact Gaussian-CDF form: x * Phi(x)
    NodeId gelu(NodeId a);
    // softmax over the last dimension, numerically shifted per row
    NodeId softmax_rows(NodeId a);
    // normalize over the last dimension; learnable gain/shift, epsilon 1e-5
    NodeId layer_norm_lastdim(NodeId a, NodeId gain, NodeId shift);
    NodeId reshape(NodeId a, std::vector<int64_t> shape);
    // general axis permutation; empty perm means 2-D swap
    NodeId transpose(NodeId a, std::vector<int> perm = {});
    NodeId concat_lastdim(const std::vector<NodeId>& parts);
    // column block `head` of `n_heads` equal blocks of the last dimension
    NodeId split_heads(NodeId a, int n_heads, int head);
    // inverse of head splitting: concatenation along the last dimension
    NodeId merge_heads(const std::vector<NodeId>& heads);
    NodeId scale(NodeId a, double c);
    NodeId sum_all(NodeId a);
    // mean over all entries of (pred - target)^2
    NodeId mse(NodeId pred, NodeId target);

    const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
    // Gradient of the last backward()'s loss w.r.t. node `id`.
    const Tensor& grad(NodeId id) const;
    bool has_grad(NodeId id) const;

    void backward(NodeId loss);

    // Overwrites a leaf's value in place (same shape), so a prefix of
    // parameter nodes can be kept alive across optimizer steps.
    void set_input(NodeId id, const Tensor& value);
    // Drops every node with id >= n, keeping the prefix alive.
    void truncate(int64_t n);

    void clear();
    int64_t size() const { return static_cast<int64_t>(nodes_.size()); }

private:
    struct Node {
        Op op = Op::kInput;
        Tensor value;
        Tensor grad;  // allocated on first touch during backward
        Tensor saved;  // op-specific forward byproducts reused by backward
        std::array<NodeId, 3> in{-1, -1, -1};
        std::vector<NodeId> var_in;  // concat inputs
        std::vector<int> perm;
        double scalar = 0.0;
        int heads_n = 0, heads_i = 0;
        bool needs_grad = false;
    };

    NodeId push(Node&& n);
    Node& at(NodeId id) { return nodes_[static_cast<size_t>(id)]; }
    const Node& at(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
    Tensor& ensure_grad(NodeId id);
    void backward_node(NodeId id);

    std::vector<Node> nodes_;
};

}  // namespace aft::ad
