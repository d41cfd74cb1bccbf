#include "lsic/state_index.hpp"

#include <limits>

#include "lsic/error.hpp"

namespace lsic {

StateIndexer::StateIndexer(const ItemParams& params, std::size_t max_states)
    : y_max_(params.y_max), radix_(params.a_max + 1), pipeline_(params.pipeline_length()), tail_(1) {
    double total = params.y_max + 1.0;
    for (int i = 0; i < pipeline_; ++i) {
        tail_ *= static_cast<std::size_t>(radix_);
        total *= radix_;
    }
    if (total > static_cast<double>(max_states))
        throw SizeError("state space of " + std::to_string(static_cast<long double>(total)) +
                        " states exceeds the budget; use a smaller lead time");
}

State StateIndexer::state(std::size_t index) const {
    State s;
    s.pipeline.resize(static_cast<std::size_t>(pipeline_));
    for (int i = pipeline_ - 1; i >= 0; --i) {
        s.pipeline[i] = static_cast<int>(index % radix_);
        index /= radix_;
    }
    s.y = static_cast<int>(index);
    return s;
}

}  // namespace lsic
