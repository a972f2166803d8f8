#include "fignn/encoder.hpp"

#include "fignn/errors.hpp"

#include <cmath>

namespace fignn::encoder {

ad::Var embed(ad::Tape& tape, const ParameterStore& store, ParamId table, const EncodedInstance& instance) {
    return tape.gather_rows(store, table, instance.features);
}

ad::Var attention_head(ad::Var embeddings, const AttentionHeadVars& head) {
    const std::size_t d = embeddings.cols();
    for (const ad::Var* w : {&head.query, &head.key, &head.value})
        if (w->cols() != d)
            throw ShapeError("attention_head: projection " + w->value().shape_string() +
                             " does not match embedding width " + std::to_string(d));
    const std::size_t head_dim = head.query.rows();
    if (head.key.rows() != head_dim || head.value.rows() != head_dim)
        throw ShapeError("attention_head: query/key/value head dimensions differ");

    ad::Var q = ad::matmul(embeddings, ad::transpose(head.query));
    ad::Var k = ad::matmul(embeddings, ad::transpose(head.key));
    ad::Var v = ad::matmul(embeddings, ad::transpose(head.value));
    ad::Var logits = ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(static_cast<double>(head_dim)));
    return ad::matmul(ad::row_softmax(logits), v);
}

ad::Var initial_states(ad::Var embeddings, std::span<const AttentionHeadVars> heads) {
    if (heads.empty()) throw ConfigError("initial_states needs at least one attention head");
    std::vector<ad::Var> outs;
    outs.reserve(heads.size());
    for (const auto& h : heads) outs.push_back(attention_head(embeddings, h));
    return ad::relu(outs.size() == 1 ? outs.front() : ad::concat_cols(outs));
}

}  // namespace fignn::encoder
