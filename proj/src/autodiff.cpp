#include "fignn/autodiff.hpp"

#include "fignn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fignn::ad {

const Tensor& Var::value() const { return tape_->value(id_); }

// ---------------------------------------------------------------- tape

Var Tape::record(std::string op, Tensor value, std::vector<std::size_t> inputs, BackwardFn fn) {
    if (!value.all_finite()) throw NumericError("non-finite value produced by op '" + op + "'");
    Node n;
    n.op = std::move(op);
    n.owned = std::move(value);
    n.inputs = std::move(inputs);
    n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.ref ? *n.ref : n.owned;
}

Tensor& Tape::accumulate_grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) {
        const Tensor& v = value(id);
        n.grad = Tensor(v.rows(), v.cols());
    }
    return n.grad;
}

ParameterStore& Tape::grad_sink() {
    if (!sink_) throw InvariantError("gradient sink requested outside backward");
    return *sink_;
}

Var Tape::constant(Tensor value) { return record("constant", std::move(value), {}, nullptr); }

Var Tape::parameter(const ParameterStore& store, ParamId id) {
    if (bound_store_ && bound_store_ != &store)
        throw InvariantError("tape already bound to a different parameter store");
    bound_store_ = &store;
    if (param_nodes_.size() < store.size()) param_nodes_.resize(store.size(), -1);
    if (param_nodes_[id] >= 0) return Var(this, static_cast<std::size_t>(param_nodes_[id]));
    const Tensor& v = store.value(id);
    if (!v.all_finite()) throw NumericError("parameter '" + store.name(id) + "' is not finite");
    Node n;
    n.op = "parameter:" + store.name(id);
    n.ref = &v;
    n.param = static_cast<std::ptrdiff_t>(id);
    nodes_.push_back(std::move(n));
    param_nodes_[id] = static_cast<std::ptrdiff_t>(nodes_.size() - 1);
    return Var(this, nodes_.size() - 1);
}

Var Tape::gather_rows(const ParameterStore& store, ParamId id, std::span<const std::size_t> rows) {
    if (bound_store_ && bound_store_ != &store)
        throw InvariantError("tape already bound to a different parameter store");
    bound_store_ = &store;
    const Tensor& table = store.value(id);
    Tensor out(rows.size(), table.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= table.rows())
            throw ShapeError("gather index " + std::to_string(rows[r]) + " out of range for '" +
                             store.name(id) + "' with " + std::to_string(table.rows()) + " rows");
        std::copy_n(table.row(rows[r]).begin(), table.cols(), out.values().begin() + r * table.cols());
    }
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    return record("gather:" + store.name(id), std::move(out), {},
                  [id, idx = std::move(idx)](Tape& t, std::size_t self) {
                      const Tensor& g = t.grad_of(self);
                      Tensor& dst = t.grad_sink().grad(id);
                      const std::size_t c = g.cols();
                      for (std::size_t r = 0; r < idx.size(); ++r)
                          for (std::size_t k = 0; k < c; ++k) dst(idx[r], k) += g(r, k);
                  });
}

void Tape::backward(Var loss, ParameterStore& store) {
    if (loss.tape_ != this) throw InvariantError("loss belongs to a different tape");
    if (value(loss.id_).size() != 1)
        throw ShapeError("backward requires a scalar loss, got " + value(loss.id_).shape_string());
    if (bound_store_ && bound_store_ != &store)
        throw InvariantError("backward store differs from the store used in the forward pass");
    sink_ = &store;
    accumulate_grad(loss.id_)[0] += 1.0;
    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.empty() || !n.backward) continue;
        n.backward(*this, i);
        for (std::size_t in : nodes_[i].inputs) {
            const Tensor& g = nodes_[in].grad;
            if (!g.empty() && !g.all_finite())
                throw NumericError("non-finite gradient flowing out of op '" + nodes_[i].op + "'");
        }
    }
    for (std::size_t i = 0; i <= loss.id_; ++i) {
        const Node& n = nodes_[i];
        if (n.param < 0 || n.grad.empty()) continue;
        Tensor& dst = store.grad(static_cast<ParamId>(n.param));
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
    }
    sink_ = nullptr;
}

Tensor Tape::grad(Var v) const {
    const Node& n = nodes_[v.id_];
    if (!n.grad.empty()) return n.grad;
    const Tensor& val = value(v.id_);
    return Tensor(val.rows(), val.cols());
}

// ---------------------------------------------------------------- kernels

namespace {

// c += op(a) * op(b)
void gemm_acc(Tensor& c, const Tensor& a, bool ta, const Tensor& b, bool tb) {
    const std::size_t m = ta ? a.cols() : a.rows();
    const std::size_t k = ta ? a.rows() : a.cols();
    const std::size_t n = tb ? b.rows() : b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ta ? a(p, i) : a(i, p);
            if (av == 0.0) continue;
            double* crow = &c(i, 0);
            if (!tb) {
                const double* brow = b.values().data() + p * b.cols();
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            } else {
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * b(j, p);
            }
        }
    }
}

Tape& same_tape(Var a, Var b, const char* op) {
    if (&a.tape() != &b.tape()) throw InvariantError(std::string(op) + ": operands on different tapes");
    return a.tape();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

void add_into(Tensor& dst, const Tensor& src, double factor = 1.0) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
}

}  // namespace

double sigmoid_scalar(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double apply_activation(Activation fn, double x, double slope) {
    switch (fn) {
    case Activation::sigmoid: return sigmoid_scalar(x);
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0 ? x : 0.0;
    case Activation::leaky_relu: return x > 0 ? x : slope * x;
    }
    return x;
}

// ---------------------------------------------------------------- ops

Var matmul(Var a, Var b) {
    Tape& t = same_tape(a, b, "matmul");
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.cols() != bv.rows())
        throw ShapeError("matmul: inner dimensions differ " + av.shape_string() + " * " + bv.shape_string());
    Tensor out(av.rows(), bv.cols());
    gemm_acc(out, av, false, bv, false);
    const std::size_t ia = a.id(), ib = b.id();
    return t.record("matmul", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_of(self);
        gemm_acc(t.accumulate_grad(ia), g, false, t.value(ib), true);
        gemm_acc(t.accumulate_grad(ib), t.value(ia), true, g, false);
    });
}

Var transpose(Var a) {
    const Tensor& av = a.value();
    Tensor out(av.cols(), av.rows());
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = 0; c < av.cols(); ++c) out(c, r) = av(r, c);
    const std::size_t ia = a.id();
    return a.tape().record("transpose", std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_of(self);
        Tensor& d = t.accumulate_grad(ia);
        for (std::size_t r = 0; r < d.rows(); ++r)
            for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) += g(c, r);
    });
}

Var add(Var a, Var b) {
    Tape& t = same_tape(a, b, "add");
    require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    add_into(out, b.value());
    const std::size_t ia = a.id(), ib = b.id();
    return t.record("add", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        add_into(t.accumulate_grad(ia), t.grad_of(self));
        add_into(t.accumulate_grad(ib), t.grad_of(self));
    });
}

Var sub(Var a, Var b) {
    Tape& t = same_tape(a, b, "sub");
    require_same_shape(a.value(), b.value(), "sub");
    Tensor out = a.value();
    add_into(out, b.value(), -1.0);
    const std::size_t ia = a.id(), ib = b.id();
    return t.record("sub", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        add_into(t.accumulate_grad(ia), t.grad_of(self));
        add_into(t.accumulate_grad(ib), t.grad_of(self), -1.0);
    });
}

Var mul(Var a, Var b) {
    Tape& t = same_tape(a, b, "mul");
    require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return t.record("mul", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_of(self);
        {
            Tensor& da = t.accumulate_grad(ia);
            const Tensor& bv = t.value(ib);
            for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
        }
        Tensor& db = t.accumulate_grad(ib);
        const Tensor& av = t.value(ia);
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
    });
}

Var scale(Var a, double c) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
    const std::size_t ia = a.id();
    return a.tape().record("scale", std::move(out), {ia}, [ia, c](Tape& t, std::size_t self) {
        add_into(t.accumulate_grad(ia), t.grad_of(self), c);
    });
}

Var add_scalar(Var a, double c) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c;
    const std::size_t ia = a.id();
    return a.tape().record("add_scalar", std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
        add_into(t.accumulate_grad(ia), t.grad_of(self));
    });
}

Var add_bias(Var x, Var b) {
    Tape& t = same_tape(x, b, "add_bias");
    const Tensor& xv = x.value();
    const Tensor& bv = b.value();
    const bool row_bias = bv.rows() == 1 && bv.cols() == xv.cols();
    const bool col_bias = bv.cols() == 1 && bv.rows() == xv.rows();
    const bool scalar_bias = bv.size() == 1;
    if (!row_bias && !col_bias && !scalar_bias)
        throw ShapeError("add_bias: bias " + bv.shape_string() + " does not broadcast over " + xv.shape_string());
    Tensor out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c)
            out(r, c) += scalar_bias ? bv[0] : (row_bias ? bv(0, c) : bv(r, 0));
    const std::size_t ix = x.id(), ib = b.id();
    return t.record("add_bias", std::move(out), {ix, ib},
                    [ix, ib, row_bias, scalar_bias](Tape& t, std::size_t self) {
                        const Tensor& g = t.grad_of(self);
                        add_into(t.accumulate_grad(ix), g);
                        Tensor& db = t.accumulate_grad(ib);
                        for (std::size_t r = 0; r < g.rows(); ++r)
                            for (std::size_t c = 0; c < g.cols(); ++c) {
                                if (scalar_bias)
                                    db[0] += g(r, c);
                                else if (row_bias)
                                    db(0, c) += g(r, c);
                                else
                                    db(r, 0) += g(r, c);
                            }
                    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const std::size_t c = parts.front().cols();
    std::size_t r = 0;
    std::vector<std::size_t> ids;
    for (const Var& p : parts) {
        if (p.cols() != c) throw ShapeError("concat_rows: column count mismatch");
        if (&p.tape() != &parts.front().tape()) throw InvariantError("concat_rows: operands on different tapes");
        r += p.rows();
        ids.push_back(p.id());
    }
    Tensor out(r, c);
    std::size_t at = 0;
    for (const Var& p : parts) {
        const auto src = p.value().values();
        std::copy(src.begin(), src.end(), out.values().begin() + at);
        at += src.size();
    }
    std::vector<std::size_t> inputs = ids;
    return parts.front().tape().record("concat_rows", std::move(out), std::move(inputs),
                                       [ids](Tape& t, std::size_t self) {
                                           const Tensor& g = t.grad_of(self);
                                           std::size_t at = 0;
                                           for (std::size_t id : ids) {
                                               Tensor& d = t.accumulate_grad(id);
                                               for (std::size_t k = 0; k < d.size(); ++k) d[k] += g[at + k];
                                               at += d.size();
                                           }
                                       });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const std::size_t r = parts.front().rows();
    std::size_t c = 0;
    std::vector<std::size_t> ids;
    for (const Var& p : parts) {
        if (p.rows() != r) throw ShapeError("concat_cols: row count mismatch");
        if (&p.tape() != &parts.front().tape()) throw InvariantError("concat_cols: operands on different tapes");
        c += p.cols();
        ids.push_back(p.id());
    }
    Tensor out(r, c);
    std::size_t off = 0;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < v.cols(); ++j) out(i, off + j) = v(i, j);
        off += v.cols();
    }
    std::vector<std::size_t> inputs = ids;
    return parts.front().tape().record("concat_cols", std::move(out), std::move(inputs),
                                       [ids](Tape& t, std::size_t self) {
                                           const Tensor& g = t.grad_of(self);
                                           std::size_t off = 0;
                                           for (std::size_t id : ids) {
                                               Tensor& d = t.accumulate_grad(id);
                                               for (std::size_t i = 0; i < d.rows(); ++i)
                                                   for (std::size_t j = 0; j < d.cols(); ++j)
                                                       d(i, j) += g(i, off + j);
                                               off += d.cols();
                                           }
                                       });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
    const Tensor& xv = x.value();
    if (begin >= end || end > xv.rows())
        throw ShapeError("slice_rows: [" + std::to_string(begin) + "," + std::to_string(end) + ") out of " +
                         xv.shape_string());
    const std::size_t c = xv.cols();
    std::vector<double> data(xv.values().begin() + begin * c, xv.values().begin() + end * c);
    const std::size_t ix = x.id();
    return x.tape().record("slice_rows", Tensor(end - begin, c, std::move(data)), {ix},
                           [ix, begin](Tape& t, std::size_t self) {
                               const Tensor& g = t.grad_of(self);
                               Tensor& d = t.accumulate_grad(ix);
                               const std::size_t off = begin * d.cols();
                               for (std::size_t k = 0; k < g.size(); ++k) d[off + k] += g[k];
                           });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
    const Tensor& xv = x.value();
    if (begin >= end || end > xv.cols())
        throw ShapeError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(end) + ") out of " +
                         xv.shape_string());
    Tensor out(xv.rows(), end - begin);
    for (std::size_t r = 0; r < xv.rows(); ++r)
        for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = xv(r, c);
    const std::size_t ix = x.id();
    return x.tape().record("slice_cols", std::move(out), {ix}, [ix, begin](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_of(self);
        Tensor& d = t.accumulate_grad(ix);
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) d(r, begin + c) += g(r, c);
    });
}

Var row_softmax(Var x, std::span<const std::uint8_t> hidden) {
    const Tensor& xv = x.value();
    if (!hidden.empty() && hidden.size() != xv.size())
        throw ShapeError("row_softmax: mask size does not match " + xv.shape_string());
    auto is_hidden = [&](std::size_t r, std::size_t c) {
        return !hidden.empty() && hidden[r * xv.cols() + c] != 0;
    };
    Tensor out(xv.rows(), xv.cols());
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < xv.cols(); ++c)
            if (!is_hidden(r, c)) mx = std::max(mx, xv(r, c));
        if (mx == -std::numeric_limits<double>::infinity())
            throw ShapeError("row_softmax: row " + std::to_string(r) + " is fully masked");
        double z = 0.0;
        for (std::size_t c = 0; c < xv.cols(); ++c) {
            if (is_hidden(r, c)) continue;
            out(r, c) = std::exp(xv(r, c) - mx);
            z += out(r, c);
        }
        for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) /= z;
    }
    const std::size_t ix = x.id();
    return x.tape().record("row_softmax", std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
        // masked outputs are constant 0, so their y factor removes them from the Jacobian
        const Tensor& g = t.grad_of(self);
        const Tensor& y = t.value(self);
        Tensor& d = t.accumulate_grad(ix);
        for (std::size_t r = 0; r < y.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
            for (std::size_t c = 0; c < y.cols(); ++c) d(r, c) += y(r, c) * (g(r, c) - dot);
        }
    });
}

Var pointwise(Activation fn, Var x, double slope) {
    Tensor out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply_activation(fn, out[i], slope);
    static constexpr const char* names[] = {"sigmoid", "tanh", "relu", "leaky_relu"};
    const std::size_t ix = x.id();
    return x.tape().record(names[static_cast<int>(fn)], std::move(out), {ix},
                           [ix, fn, slope](Tape& t, std::size_t self) {
                               const Tensor& g = t.grad_of(self);
                               const Tensor& y = t.value(self);
                               const Tensor& in = t.value(ix);
                               Tensor& d = t.accumulate_grad(ix);
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   double dy = 0.0;
                                   switch (fn) {
                                   case Activation::sigmoid: dy = y[i] * (1.0 - y[i]); break;
                                   case Activation::tanh: dy = 1.0 - y[i] * y[i]; break;
                                   case Activation::relu: dy = in[i] > 0 ? 1.0 : 0.0; break;
                                   case Activation::leaky_relu: dy = in[i] > 0 ? 1.0 : slope; break;
                                   }
                                   d[i] += g[i] * dy;
                               }
                           });
}

Var sum(Var x) {
    double s = 0.0;
    for (double v : x.value().values()) s += v;
    const std::size_t ix = x.id();
    return x.tape().record("sum", Tensor::scalar(s), {ix}, [ix](Tape& t, std::size_t self) {
        const double g = t.grad_of(self)[0];
        Tensor& d = t.accumulate_grad(ix);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g;
    });
}

Var sum_rows(Var x) {
    const Tensor& xv = x.value();
    Tensor out(1, xv.cols());
    for (std::size_t r = 0; r < xv.rows(); ++r)
        for (std::size_t c = 0; c < xv.cols(); ++c) out(0, c) += xv(r, c);
    const std::size_t ix = x.id();
    return x.tape().record("sum_rows", std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_of(self);
        Tensor& d = t.accumulate_grad(ix);
        for (std::size_t r = 0; r < d.rows(); ++r)
            for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) += g(0, c);
    });
}

Var mean(Var x) {
    const double n = static_cast<double>(x.value().size());
    double s = 0.0;
    for (double v : x.value().values()) s += v;
    const std::size_t ix = x.id();
    return x.tape().record("mean", Tensor::scalar(s / n), {ix}, [ix, n](Tape& t, std::size_t self) {
        const double g = t.grad_of(self)[0] / n;
        Tensor& d = t.accumulate_grad(ix);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g;
    });
}

Var log_loss_from_logit(Var logit, double label) {
    if (logit.value().size() != 1) throw ShapeError("log_loss_from_logit: logit must be scalar");
    if (label != 0.0 && label != 1.0) throw DataError("log_loss_from_logit: label must be 0 or 1");
    const double p = sigmoid_scalar(logit.value()[0]);
    const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double loss = -(label * std::log(pc) + (1.0 - label) * std::log(1.0 - pc));
    const std::size_t ix = logit.id();
    return logit.tape().record("log_loss", Tensor::scalar(loss), {ix}, [ix, p, label](Tape& t, std::size_t self) {
        t.accumulate_grad(ix)[0] += t.grad_of(self)[0] * (p - label);
    });
}

}  // namespace fignn::ad
