#include "fignn/parameters.hpp"

#include "fignn/errors.hpp"

namespace fignn {

ParamId ParameterStore::add(const std::string& name, Tensor value) {
    if (index_.contains(name)) throw InvariantError("duplicate parameter name '" + name + "'");
    const ParamId id = entries_.size();
    Tensor grad(value.rows(), value.cols());
    entries_.push_back({name, std::move(value), std::move(grad)});
    index_.emplace(name, id);
    return id;
}

ParamId ParameterStore::id(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvariantError("unknown parameter '" + name + "'");
    return it->second;
}

void ParameterStore::zero_grad() {
    for (auto& e : entries_) e.grad.fill(0.0);
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

}  // namespace fignn
