#pragma once

#include <cstddef>
#include <cstdint>

#include "lsic/env.hpp"

namespace lsic {

// Mixed-radix index over (y, pipeline): y is the most significant digit,
// then the pipeline oldest first, each pipeline digit in base a_max+1.
class StateIndexer {
public:
    // Throws SizeError when the space exceeds `max_states`.
    explicit StateIndexer(const ItemParams& params, std::size_t max_states = 50'000'000);

    std::size_t size() const { return (static_cast<std::size_t>(y_max_) + 1) * tail_; }
    std::size_t tail() const { return tail_; }  // states per inventory level
    int actions() const { return radix_; }

    std::size_t index(const State& s) const {
        std::size_t idx = static_cast<std::size_t>(s.y);
        for (int x : s.pipeline) idx = idx * radix_ + static_cast<std::size_t>(x);
        return idx;
    }
    State state(std::size_t index) const;

private:
    int y_max_;
    int radix_;
    int pipeline_;
    std::size_t tail_;
};

}  // namespace lsic
