#include "tabdistill/numerics/params.hpp"

#include <algorithm>

namespace tabdistill {

void ParamMap::add(std::string name, Matrix value) {
    if (contains(name)) throw ContractError("ParamMap: duplicate parameter '" + name + "'");
    entries_.emplace_back(std::move(name), std::move(value));
}

bool ParamMap::contains(std::string_view name) const noexcept {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const Entry& e) { return e.first == name; });
}

Matrix& ParamMap::at(std::string_view name) {
    for (auto& e : entries_)
        if (e.first == name) return e.second;
    throw ContractError("ParamMap: no parameter named '" + std::string(name) + "'");
}

const Matrix& ParamMap::at(std::string_view name) const {
    for (const auto& e : entries_)
        if (e.first == name) return e.second;
    throw ContractError("ParamMap: no parameter named '" + std::string(name) + "'");
}

std::size_t ParamMap::total_elements() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.second.size();
    return n;
}

std::vector<std::string> ParamMap::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.first);
    return out;
}

bool ParamMap::same_layout(const ParamMap& other) const noexcept {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].first != other.entries_[i].first) return false;
        if (!entries_[i].second.same_shape(other.entries_[i].second)) return false;
    }
    return true;
}

ParamMap ParamMap::zeros_like() const {
    ParamMap out;
    for (const auto& e : entries_) out.add(e.first, Matrix(e.second.rows(), e.second.cols()));
    return out;
}

}  // namespace tabdistill
