#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tabdistill/numerics/matrix.hpp"

namespace tabdistill {

// Ordered collection of named matrices. Used for trainable parameters,
// their gradients, and optimizer slots; insertion order is the iteration
// order everywhere (serialization, grad checks, optimizer updates).
class ParamMap {
public:
    using Entry = std::pair<std::string, Matrix>;

    void add(std::string name, Matrix value);
    bool contains(std::string_view name) const noexcept;
    Matrix& at(std::string_view name);
    const Matrix& at(std::string_view name) const;

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t total_elements() const noexcept;
    std::vector<std::string> names() const;

    auto begin() noexcept { return entries_.begin(); }
    auto end() noexcept { return entries_.end(); }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    // Same names in the same order with identical shapes.
    bool same_layout(const ParamMap& other) const noexcept;
    // Zero-filled map with this map's layout.
    ParamMap zeros_like() const;

    friend bool operator==(const ParamMap& a, const ParamMap& b) noexcept {
        return a.entries_ == b.entries_;
    }

private:
    std::vector<Entry> entries_;
};

using GradientMap = ParamMap;

}  // namespace tabdistill
