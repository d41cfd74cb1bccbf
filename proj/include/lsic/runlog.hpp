#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lsic {

struct RunLogRow {
    std::string run_id;
    std::uint64_t seed = 0;
    int episode = 0;  // 1-based count of completed training episodes
    std::uint64_t env_steps = 0;
    double eval_mean_cost = 0.0;
    double eval_std = 0.0;
    double beta = 0.0;
    double wallclock_s = 0.0;

    friend bool operator==(const RunLogRow&, const RunLogRow&) = default;
};

struct RunLog {
    std::vector<RunLogRow> rows;

    void append(RunLogRow row);
    friend bool operator==(const RunLog&, const RunLog&) = default;
};

}  // namespace lsic
