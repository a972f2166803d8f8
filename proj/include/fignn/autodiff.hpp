#pragma once

#include "fignn/parameters.hpp"
#include "fignn/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fignn::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    Tape& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Computation record for reverse-mode differentiation. Nodes are appended in
/// execution order, which is a topological order; backward walks it in reverse.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);

    // Leaf bound to a stored parameter (no copy). Repeated calls return the same node.
    Var parameter(const ParameterStore& store, ParamId id);
    Var parameter(const ParameterStore& store, const std::string& name) {
        return parameter(store, store.id(name));
    }

    // Rows of a stored matrix; backward scatters straight into the store's gradient.
    Var gather_rows(const ParameterStore& store, ParamId id, std::span<const std::size_t> rows);

    // Accumulates d(loss)/d(parameter) into every touched gradient slot of `store`.
    void backward(Var loss, ParameterStore& store);

    // Gradient of an arbitrary node after backward; zeros if it received none.
    Tensor grad(Var v) const;

    std::size_t size() const { return nodes_.size(); }
    const std::string& op_name(std::size_t id) const { return nodes_[id].op; }
    const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }

    // Op implementation hooks.
    Var record(std::string op, Tensor value, std::vector<std::size_t> inputs, BackwardFn fn);
    const Tensor& value(std::size_t id) const;
    const Tensor& grad_of(std::size_t id) const { return nodes_[id].grad; }
    Tensor& accumulate_grad(std::size_t id);
    ParameterStore& grad_sink();

private:
    struct Node {
        std::string op;
        Tensor owned;
        const Tensor* ref = nullptr;
        Tensor grad;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        std::ptrdiff_t param = -1;
    };

    std::vector<Node> nodes_;
    std::vector<std::ptrdiff_t> param_nodes_;
    const ParameterStore* bound_store_ = nullptr;
    ParameterStore* sink_ = nullptr;
};

enum class Activation { sigmoid, tanh, relu, leaky_relu };

inline constexpr double kDefaultLeakySlope = 0.01;

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
// b is 1xC (added to every row), Rx1 (added to every column) or 1x1.
Var add_bias(Var x, Var b);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var x, std::size_t begin, std::size_t end);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
// `hidden` (row-major, same size as x, or empty) marks entries forced to 0.
Var row_softmax(Var x, std::span<const std::uint8_t> hidden = {});
Var pointwise(Activation fn, Var x, double leaky_slope = kDefaultLeakySlope);
Var sum(Var x);
Var sum_rows(Var x);  // 1xC column sums
Var mean(Var x);
// Binary log loss of sigmoid(logit) against label; probability clamped to [1e-7, 1-1e-7].
Var log_loss_from_logit(Var logit, double label);

inline Var sigmoid(Var x) { return pointwise(Activation::sigmoid, x); }
inline Var tanh(Var x) { return pointwise(Activation::tanh, x); }
inline Var relu(Var x) { return pointwise(Activation::relu, x); }
inline Var leaky_relu(Var x, double slope = kDefaultLeakySlope) {
    return pointwise(Activation::leaky_relu, x, slope);
}

inline constexpr double kProbabilityClamp = 1e-7;

double apply_activation(Activation fn, double x, double leaky_slope = kDefaultLeakySlope);
double sigmoid_scalar(double x);

}  // namespace fignn::ad
