#pragma once

#include "fignn/tensor.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace fignn {

using ParamId = std::size_t;

/// Named trainable tensors with paired gradient slots, kept in insertion order.
class ParameterStore {
public:
    ParamId add(const std::string& name, Tensor value);

    bool contains(const std::string& name) const { return index_.contains(name); }
    ParamId id(const std::string& name) const;
    std::size_t size() const { return entries_.size(); }

    const std::string& name(ParamId id) const { return entries_.at(id).name; }
    const Tensor& value(ParamId id) const { return entries_.at(id).value; }
    Tensor& value(ParamId id) { return entries_.at(id).value; }
    const Tensor& grad(ParamId id) const { return entries_.at(id).grad; }
    Tensor& grad(ParamId id) { return entries_.at(id).grad; }

    const Tensor& value(const std::string& name) const { return value(id(name)); }
    Tensor& value(const std::string& name) { return value(id(name)); }
    const Tensor& grad(const std::string& name) const { return grad(id(name)); }
    Tensor& grad(const std::string& name) { return grad(id(name)); }

    void zero_grad();
    std::size_t scalar_count() const;

    friend bool operator==(const ParameterStore& a, const ParameterStore& b) {
        if (a.entries_.size() != b.entries_.size()) return false;
        for (std::size_t i = 0; i < a.entries_.size(); ++i)
            if (a.entries_[i].name != b.entries_[i].name || !(a.entries_[i].value == b.entries_[i].value))
                return false;
        return true;
    }

private:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
    };
    std::vector<Entry> entries_;
    std::map<std::string, ParamId> index_;
};

}  // namespace fignn
