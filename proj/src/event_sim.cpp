#include "cascade/event_sim.hpp"

#include "cascade/error.hpp"

#include <algorithm>
#include <limits>

namespace cascade
{
    SimState initial_state(const CascadeParams &params)
    {
        SimState s;
        s.x.x.assign(params.n, 0);
        s.logs.resize(params.n > 0 ? params.n - 1 : 0);
        return s;
    }

    void apply_tick(SimState &state, std::size_t k, double t)
    {
        if (k >= state.x.x.size())
        {
            throw Error(ErrorCode::IndexOutOfRange, "no processor " + std::to_string(k));
        }
        state.t = t;
        state.x.x[k] += 1;
    }

    int apply_message(SimState &state, std::size_t j, double t)
    {
        auto &x = state.x.x;
        const std::size_t n = x.size();
        if (j + 1 >= n)
        {
            throw Error(ErrorCode::IndexOutOfRange, "no link from processor " + std::to_string(j));
        }
        state.t = t;
        const std::int64_t payload = x[j];
        int depth = 0;
        if (x[j + 1] > payload)
        {
            x[j + 1] = payload;
            depth = 1;
            for (std::size_t q = j + 1; q + 1 < n; ++q)
            {
                auto &log = state.logs[q];
                auto first = std::lower_bound(log.begin(), log.end(), x[q], [](const LogEntry &e, std::int64_t v)
                                              { return e.payload < v; });
                if (first == log.end())
                {
                    break;
                }
                const std::int64_t lowest = first->payload;
                log.erase(first, log.end());
                if (lowest >= x[q + 1])
                {
                    break;
                }
                x[q + 1] = lowest;
                ++depth;
            }
        }
        state.logs[j].push_back({t, payload});
        return depth;
    }

    void prune_logs(SimState &state)
    {
        const std::int64_t floor = state.x.x.front();
        for (auto &log : state.logs)
        {
            while (!log.empty() && log.front().payload < floor)
            {
                log.pop_front();
            }
        }
    }

    SimState prepare_state(const CascadeParams &params, const AbsoluteState &x, Rng &rng)
    {
        if (x.x.size() != params.n)
        {
            throw Error(ErrorCode::LengthMismatch, "state length does not match the model");
        }
        SimState s = initial_state(params);
        s.x = x;
        for (std::size_t q = 0; q + 1 < params.n; ++q)
        {
            std::vector<std::int64_t> payloads;
            // Raw rates, not the kernel's b: each event of processor q at value v
            // is a send or the tick that ends the value.
            const double send_share = params.betas[q] / (params.betas[q] + params.lambdas[q]);
            for (std::int64_t v = x.x.front(); v <= x.x[q]; ++v)
            {
                while (rng.uniform() < send_share)
                {
                    payloads.push_back(v);
                }
            }
            const auto total = static_cast<double>(payloads.size());
            for (std::size_t i = 0; i < payloads.size(); ++i)
            {
                s.logs[q].push_back({static_cast<double>(i) - total + 1.0, payloads[i]});
            }
        }
        return s;
    }

    EventSimSummary run_event_sim(const CascadeParams &params, double horizon, std::uint64_t seed)
    {
        if (!(horizon > 0.0))
        {
            throw Error(ErrorCode::NonPositiveHorizon, "horizon must be > 0");
        }
        const std::size_t n = params.n;
        const std::size_t links = n - 1;
        constexpr double inf = std::numeric_limits<double>::infinity();

        Rng rng = Rng::for_stream(seed, 0);
        SimState s = initial_state(params);

        std::vector<double> rates(n + links);
        for (std::size_t k = 0; k < n; ++k)
        {
            rates[k] = params.lambdas[k];
        }
        for (std::size_t j = 0; j < links; ++j)
        {
            rates[n + j] = params.betas[j];
        }
        s.clocks.resize(rates.size());
        for (std::size_t f = 0; f < rates.size(); ++f)
        {
            s.clocks[f] = rates[f] > 0.0 ? rng.exponential(rates[f]) : inf;
        }

        EventSimSummary out;
        out.horizon = horizon;
        out.tick_counts.assign(n, 0);
        out.message_counts.assign(links, 0);
        out.effective_messages.assign(links, 0);
        out.rollback_depth_histogram.assign(n, 0);

        for (;;)
        {
            // Ties resolve to the lowest flow index.
            std::size_t flow = 0;
            for (std::size_t f = 1; f < s.clocks.size(); ++f)
            {
                if (s.clocks[f] < s.clocks[flow])
                {
                    flow = f;
                }
            }
            const double t = s.clocks[flow];
            if (t > horizon)
            {
                break;
            }
            if (flow < n)
            {
                apply_tick(s, flow, t);
                ++out.tick_counts[flow];
            }
            else
            {
                const std::size_t j = flow - n;
                const int depth = apply_message(s, j, t);
                ++out.message_counts[j];
                if (depth > 0)
                {
                    ++out.effective_messages[j];
                }
                ++out.rollback_depth_histogram[static_cast<std::size_t>(depth)];
            }
            s.clocks[flow] = t + rng.exponential(rates[flow]);
            if ((++out.events & 1023U) == 0)
            {
                prune_logs(s);
            }
        }

        out.final_x = s.x;
        out.increments = s.x.x;
        out.speeds.resize(n);
        for (std::size_t k = 0; k < n; ++k)
        {
            out.speeds[k] = static_cast<double>(s.x.x[k]) / horizon;
        }
        return out;
    }
} // namespace cascade
