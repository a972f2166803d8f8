#include "fignn/graph.hpp"

#include "fignn/errors.hpp"

namespace fignn::graph {

namespace {

std::vector<std::uint8_t> diagonal_mask(std::size_t m) {
    std::vector<std::uint8_t> hidden(m * m, 0);
    for (std::size_t i = 0; i < m; ++i) hidden[i * m + i] = 1;
    return hidden;
}

}  // namespace

ad::Var edge_attention(ad::Var initial, ad::Var w, double leaky_slope) {
    const std::size_t m = initial.rows();
    const std::size_t dim = initial.cols();
    if (m < 2) throw ConfigError("edge_attention needs at least 2 nodes");
    if (w.rows() != 1 || w.cols() != 2 * dim)
        throw ShapeError("edge_attention: weight " + w.value().shape_string() + " must be 1x" + std::to_string(2 * dim));
    ad::Tape& tape = initial.tape();
    // score(i, j) = w_src . h_i + w_dst . h_j, built as two rank-1 broadcasts
    ad::Var h_cols = ad::transpose(initial);
    ad::Var src = ad::matmul(ad::slice_cols(w, 0, dim), h_cols);        // 1 x m
    ad::Var dst = ad::matmul(ad::slice_cols(w, dim, 2 * dim), h_cols);  // 1 x m
    ad::Var ones_col = tape.constant(Tensor(m, 1, 1.0));
    ad::Var ones_row = tape.constant(Tensor(1, m, 1.0));
    ad::Var scores = ad::add(ad::matmul(ad::transpose(src), ones_row), ad::matmul(ones_col, dst));
    const auto hidden = diagonal_mask(m);
    return ad::row_softmax(ad::leaky_relu(scores, leaky_slope), hidden);
}

ad::Var uniform_adjacency(ad::Tape& tape, std::size_t m, bool raw_ones) {
    if (m < 2) throw ConfigError("adjacency needs at least 2 nodes");
    const double w = raw_ones ? 1.0 : 1.0 / static_cast<double>(m - 1);
    Tensor a(m, m, w);
    for (std::size_t i = 0; i < m; ++i) a(i, i) = 0.0;
    return tape.constant(std::move(a));
}

ad::Var aggregate_columns(ad::Var states_cols, ad::Var adjacency, const NodeTransformVars& tf) {
    const std::size_t m = states_cols.cols();
    if (adjacency.rows() != m || adjacency.cols() != m)
        throw ShapeError("aggregate: adjacency " + adjacency.value().shape_string() + " does not match " +
                         std::to_string(m) + " nodes");
    if (tf.shared.valid()) {
        // column i of H * A is sum_j A[j][i] h_j
        return ad::add_bias(ad::matmul(tf.shared, ad::matmul(states_cols, adjacency)), tf.bias);
    }
    if (tf.w_out.size() != m || tf.w_in.size() != m)
        throw ShapeError("aggregate: expected " + std::to_string(m) + " per-node transforms");
    std::vector<ad::Var> sent;
    sent.reserve(m);
    for (std::size_t j = 0; j < m; ++j) sent.push_back(ad::matmul(tf.w_out[j], ad::slice_cols(states_cols, j, j + 1)));
    ad::Var mixed = ad::matmul(ad::concat_cols(sent), adjacency);
    std::vector<ad::Var> received;
    received.reserve(m);
    for (std::size_t i = 0; i < m; ++i) received.push_back(ad::matmul(tf.w_in[i], ad::slice_cols(mixed, i, i + 1)));
    return ad::add_bias(ad::concat_cols(received), tf.bias);
}

ad::Var aggregate(ad::Var states, ad::Var adjacency, const NodeTransformVars& tf) {
    return ad::transpose(aggregate_columns(ad::transpose(states), adjacency, tf));
}

ad::Var gru_update(ad::Var prev, ad::Var agg, const GruVars& g) {
    using namespace ad;
    Var z = sigmoid(add_bias(add(matmul(g.w_z, agg), matmul(g.u_z, prev)), g.b_z));
    Var r = sigmoid(add_bias(add(matmul(g.w_r, agg), matmul(g.u_r, prev)), g.b_r));
    Var cand = ad::tanh(add_bias(add(matmul(g.w_h, agg), matmul(g.u_h, mul(r, prev))), g.b_h));
    // h~ * z + h * (1 - z)
    return add(mul(cand, z), mul(prev, add_scalar(scale(z, -1.0), 1.0)));
}

std::vector<ad::Var> propagate_trace(ad::Var initial, ad::Var adjacency, const NodeTransformVars& tf,
                                     const GruVars& gru, std::size_t steps, bool residual) {
    if (steps < 1) throw ConfigError("propagation needs at least 1 step");
    ad::Var first = ad::transpose(initial);
    ad::Var h = first;
    std::vector<ad::Var> trace;
    trace.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        ad::Var next = gru_update(h, aggregate_columns(h, adjacency, tf), gru);
        h = residual ? ad::add(next, first) : next;
        trace.push_back(ad::transpose(h));
    }
    return trace;
}

ad::Var propagate(ad::Var initial, ad::Var adjacency, const NodeTransformVars& tf, const GruVars& gru,
                  std::size_t steps, bool residual) {
    return propagate_trace(initial, adjacency, tf, gru, steps, residual).back();
}

}  // namespace fignn::graph
