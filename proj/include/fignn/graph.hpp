#pragma once

#include "fignn/autodiff.hpp"

#include <cstddef>
#include <vector>

// Feature-graph propagation. Node states enter and leave as m x d' row matrices;
// internally they are carried as d' x m column blocks so one matrix product
// updates every node.
namespace fignn::graph {

/// Per-node sender (W_out) and receiver (W_in) matrices plus a shared bias.
/// When `shared` is valid it replaces every W_in * W_out product with one matrix.
struct NodeTransformVars {
    std::vector<ad::Var> w_out;  // m of d' x d'
    std::vector<ad::Var> w_in;   // m of d' x d'
    ad::Var shared;              // d' x d', optional
    ad::Var bias;                // d' x 1
};

/// One GRU shared by all nodes and steps. Matrices d' x d', biases d' x 1.
struct GruVars {
    ad::Var w_z, u_z, b_z;
    ad::Var w_r, u_r, b_r;
    ad::Var w_h, u_h, b_h;
};

// A[i][j] = softmax over k != i of LeakyReLU(w . [h_i || h_k]) at k = j; zero diagonal.
// `w` is 1 x 2d', `initial` is m x d'.
ad::Var edge_attention(ad::Var initial, ad::Var w, double leaky_slope = ad::kDefaultLeakySlope);

// Constant adjacency: 1/(m-1) off the diagonal, or 1 when `raw_ones` is set.
ad::Var uniform_adjacency(ad::Tape& tape, std::size_t m, bool raw_ones = false);

// a_i = W_in^i sum_{j != i} A[j][i] W_out^j h_j + b_p, with 2m matrix-vector products.
// Input and output are m x d'.
ad::Var aggregate(ad::Var states, ad::Var adjacency, const NodeTransformVars& transforms);
ad::Var aggregate_columns(ad::Var states_cols, ad::Var adjacency, const NodeTransformVars& transforms);

// GRU step on column vectors (d' x k, any number k of nodes at once).
ad::Var gru_update(ad::Var prev_cols, ad::Var aggregated_cols, const GruVars& gru);

// Node states after each of `steps` rounds, m x d' each. With `residual`,
// h_i^t = GRU(h_i^{t-1}, a_i^t) + h_i^1; otherwise the bare GRU output.
std::vector<ad::Var> propagate_trace(ad::Var initial, ad::Var adjacency, const NodeTransformVars& transforms,
                                     const GruVars& gru, std::size_t steps, bool residual = true);

ad::Var propagate(ad::Var initial, ad::Var adjacency, const NodeTransformVars& transforms, const GruVars& gru,
                  std::size_t steps, bool residual = true);

}  // namespace fignn::graph
