#pragma once

#include "cascade/kernel.hpp"
#include "cascade/model.hpp"
#include "cascade/rng.hpp"

#include <cstdint>
#include <deque>
#include <vector>

namespace cascade
{
    struct LogEntry
    {
        double send_time = 0.0;
        std::int64_t payload = 0;
    };

    /// Continuous-time state of the cascade with explicit sent-message logs.
    ///
    /// logs[q] holds the live messages processor q has sent to q+1. Payloads in
    /// a log are nondecreasing: a rollback of q to w drops every entry with
    /// payload >= w and later sends carry payloads >= w.
    struct SimState
    {
        double t = 0.0;
        AbsoluteState x;
        std::vector<std::deque<LogEntry>> logs;
        /// Next firing time of each tick flow (n entries) followed by each
        /// message flow (n-1 entries); infinity for a silent flow.
        std::vector<double> clocks;
    };

    /// Zero local times and empty logs at time 0; clocks are left empty.
    SimState initial_state(const CascadeParams &params);

    /// Processor 0..n-1 advances its local time by one.
    void apply_tick(SimState &state, std::size_t k, double t);

    /// Processor j sends its current local time to j+1 at time t.
    ///
    /// If the recipient is ahead it rolls back to the payload, its log loses
    /// every entry with payload >= the new local time, and if any eliminated
    /// payload is below the next processor's local time, that processor rolls
    /// back to the smallest such payload; the same rule is applied down the
    /// chain. Returns the number of processors rolled back (0 when the
    /// message has no effect). Throws Error{IndexOutOfRange}.
    int apply_message(SimState &state, std::size_t j, double t);

    /// Drops log entries with payload below x_0: every rollback target is at
    /// least the current local time of processor 0, which never decreases.
    void prune_logs(SimState &state);

    /// Builds a state at local times x whose logs are regenerated by running
    /// each sender's own tick/message competition over every local-time value
    /// from x_0 to its current value, the sent-message history the embedded
    /// chain assumes. Log entries get send times in (-inf, 0].
    SimState prepare_state(const CascadeParams &params, const AbsoluteState &x, Rng &rng);

    struct EventSimSummary
    {
        double horizon = 0.0;
        AbsoluteState final_x;
        std::vector<std::int64_t> increments;
        std::vector<double> speeds;
        std::vector<std::uint64_t> tick_counts;
        std::vector<std::uint64_t> message_counts;
        std::vector<std::uint64_t> effective_messages;
        /// histogram[d] counts messages that rolled back exactly d processors.
        std::vector<std::uint64_t> rollback_depth_histogram;
        std::uint64_t events = 0;

        friend bool operator==(const EventSimSummary &, const EventSimSummary &) = default;
    };

    /// Runs the continuous-time dynamics from x = 0 up to the horizon.
    /// Randomness comes from stream 0 of the seed. Throws Error{NonPositiveHorizon}.
    EventSimSummary run_event_sim(const CascadeParams &params, double horizon, std::uint64_t seed);
} // namespace cascade
