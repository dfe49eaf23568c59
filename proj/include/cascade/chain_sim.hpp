#pragma once

#include "cascade/kernel.hpp"
#include "cascade/model.hpp"

#include <cstdint>
#include <vector>

namespace cascade
{
    struct SpeedOptions
    {
        /// Advance model time by sampled Exp(z) gaps instead of 1/z per step.
        bool exact_gaps = false;
        /// Embedded steps discarded before measurement starts.
        std::uint64_t burn_in = 0;
        unsigned threads = 0;
    };

    struct SpeedReport
    {
        /// Pooled estimate: total increment over total model time.
        std::vector<double> v_hat;
        /// 95% normal-approximation half-width from the spread of per-replica
        /// speeds; NaN when fewer than two replicas ran.
        std::vector<double> ci_half_width;
        std::size_t replicas = 0;
        std::uint64_t steps = 0;
        /// Summed over replicas.
        double elapsed_model_time = 0.0;
        std::vector<std::vector<double>> replica_speeds;
    };

    /// Replica k runs the embedded chain from x = 0 with stream k of the seed.
    SpeedReport estimate_speeds(const CascadeParams &params, std::uint64_t steps, std::size_t replicas, std::uint64_t seed,
                                const SpeedOptions &options = {});

    struct OccupationStats
    {
        std::uint64_t steps = 0;
        /// Fraction of visited states Y(1..steps) with max_k |y_k| <= radius.
        double occupancy = 1.0;
        std::int64_t max_excursion = 0;
        RelativeState final_y;
    };

    OccupationStats occupation_stats(const CascadeParams &params, std::uint64_t steps, std::int64_t radius, std::uint64_t seed);
} // namespace cascade
