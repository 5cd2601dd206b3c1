#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "kidc/rng.hpp"
#include "kidc/tensor.hpp"

namespace kidc::num {

// Handle into a Graph's tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

enum class ConvPadding { same, valid };

// Reverse-mode autodiff tape over Tensor-valued nodes. Nodes are recorded in
// the order they are created, so every non-leaf's inputs precede it and the
// tape order is already topological. Single-threaded and deterministic:
// identical inputs and seeds replay bit-identical forward and backward values.
class Graph {
public:
    // check_finite scans every op output and every gradient; a NaN/Inf is
    // reported with the op that produced it instead of propagating.
    explicit Graph(bool check_finite = true) : check_finite_(check_finite) {}

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var value(Tensor t);  // constant leaf
    Var param(Tensor t);  // trainable leaf

    const Tensor& val(Var v) const { return node(v).value; }
    // Valid after backward(); trainable leaves always have one (zeros if unused).
    const Tensor& grad(Var v) const;
    bool has_grad(Var v) const { return node(v).grad.size() > 0; }
    bool is_trainable(Var v) const { return node(v).trainable; }

    // ----- elementwise -----
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var add_row(Var m, Var row_vec);  // broadcast a length-c vector over the rows of r×c
    Var relu(Var a);
    Var gelu(Var a);
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var sum(Var a);
    Var mean(Var a);

    // ----- linear algebra -----
    Var matmul(Var a, Var b);  // m×k · k×n -> m×n
    Var transpose(Var a);
    Var vecmat(Var v, Var m);  // k · k×n -> n
    Var matvec(Var m, Var v);  // m×k · k -> m

    // ----- structure -----
    Var row(Var m, std::size_t r);
    Var slice_cols(Var m, std::size_t start, std::size_t count);
    Var slice_vec(Var v, std::size_t start, std::size_t count);
    Var concat_cols(const std::vector<Var>& parts);
    Var stack_rows(const std::vector<Var>& row_vecs);

    // ----- neural kernels -----
    Var embedding(Var table, const std::vector<int>& ids);
    // Row-wise softmax over the last dimension (rank 1 or 2). Masked positions
    // are excluded before normalization and end up exactly 0; a fully masked
    // row is an error, never NaN.
    Var softmax(Var logits);
    Var softmax_masked(Var logits, const Tensor& mask);
    Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-12);
    Var conv1d(Var input, Var kernels, ConvPadding padding);
    Var max_pool_rows(Var x);  // len×d -> d, max over positions per channel
    Var cross_entropy(Var logits, const std::vector<int>& targets);
    // Inverted dropout: scales kept values by 1/(1-rate) at train time and is
    // the identity in eval mode.
    Var dropout(Var x, double rate, Rng& rng, bool train_mode);

    void backward(Var loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;  // allocated lazily during backward
        bool trainable = false;
        const char* op = "leaf";
        std::function<void(Graph&, int)> backprop;  // accumulates into input grads
    };

    bool check_finite_;
    std::vector<Node> nodes_;

    Node& node(Var v) { return nodes_.at(static_cast<std::size_t>(v.id)); }
    const Node& node(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)); }
    Tensor& grad_buf(int id);
    Var record(const char* op, Tensor value, std::function<void(Graph&, int)> backprop);
    void check_value(const char* op, const Tensor& t) const;
};

// Canonical gated LSTM cell (the paper names the layer but not its equations):
//   gates = x·w + h_prev·u + b, split i|f|g|o
//   c = sigmoid(f)*c_prev + sigmoid(i)*tanh(g),  h = sigmoid(o)*tanh(c)
// x: d_in, h_prev/c_prev: H, w: d_in×4H, u: H×4H, b: 4H.
struct LstmState {
    Var h;
    Var c;
};
LstmState lstm_cell(Graph& g, Var x, Var h_prev, Var c_prev, Var w, Var u, Var b);

// Additive attention pooling: scores = v·tanh(states·w) per position, weights
// softmax over unmasked positions, output the weighted sum of states.
// states: len×d, w: d×a, v: a, mask: optional len vector of {0,1}.
Var attention_pool(Graph& g, Var states, Var w, Var v, const Tensor* mask = nullptr);

}  // namespace kidc::num
