#include "cascade/chain_sim.hpp"

#include "cascade/error.hpp"
#include "cascade/parallel.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace cascade
{
    namespace
    {
        struct ReplicaResult
        {
            std::vector<std::int64_t> increments;
            double elapsed = 0.0;
        };

        ReplicaResult run_replica(const CascadeParams &params, std::uint64_t steps, Rng rng, const SpeedOptions &options)
        {
            std::vector<std::int64_t> x(params.n, 0);
            for (std::uint64_t s = 0; s < options.burn_in; ++s)
            {
                sample_step_inplace(params, x, rng);
            }
            const std::vector<std::int64_t> start = x;
            ReplicaResult r;
            for (std::uint64_t s = 0; s < steps; ++s)
            {
                if (options.exact_gaps)
                {
                    r.elapsed += rng.exponential(params.z);
                }
                sample_step_inplace(params, x, rng);
            }
            if (!options.exact_gaps)
            {
                r.elapsed = static_cast<double>(steps) / params.z;
            }
            r.increments.resize(params.n);
            for (std::size_t k = 0; k < params.n; ++k)
            {
                r.increments[k] = x[k] - start[k];
            }
            return r;
        }
    } // namespace

    SpeedReport estimate_speeds(const CascadeParams &params, std::uint64_t steps, std::size_t replicas, std::uint64_t seed,
                                const SpeedOptions &options)
    {
        if (steps == 0 || replicas == 0)
        {
            throw Error(ErrorCode::InvalidArgument, "steps and replicas must be >= 1");
        }
        std::vector<ReplicaResult> results(replicas);
        parallel_for(replicas, options.threads, [&](std::size_t k)
                     { results[k] = run_replica(params, steps, Rng::for_stream(seed, k), options); });

        const std::size_t n = params.n;
        SpeedReport report;
        report.replicas = replicas;
        report.steps = steps;
        report.v_hat.assign(n, 0.0);
        report.ci_half_width.assign(n, std::numeric_limits<double>::quiet_NaN());
        report.replica_speeds.assign(replicas, std::vector<double>(n, 0.0));

        std::vector<double> total_increment(n, 0.0);
        for (std::size_t k = 0; k < replicas; ++k)
        {
            report.elapsed_model_time += results[k].elapsed;
            for (std::size_t j = 0; j < n; ++j)
            {
                total_increment[j] += static_cast<double>(results[k].increments[j]);
                report.replica_speeds[k][j] = static_cast<double>(results[k].increments[j]) / results[k].elapsed;
            }
        }
        for (std::size_t j = 0; j < n; ++j)
        {
            report.v_hat[j] = total_increment[j] / report.elapsed_model_time;
            if (replicas >= 2)
            {
                double mean = 0.0;
                for (const auto &r : report.replica_speeds)
                {
                    mean += r[j];
                }
                mean /= static_cast<double>(replicas);
                double ss = 0.0;
                for (const auto &r : report.replica_speeds)
                {
                    ss += (r[j] - mean) * (r[j] - mean);
                }
                const double sd = std::sqrt(ss / static_cast<double>(replicas - 1));
                report.ci_half_width[j] = 1.96 * sd / std::sqrt(static_cast<double>(replicas));
            }
        }
        return report;
    }

    OccupationStats occupation_stats(const CascadeParams &params, std::uint64_t steps, std::int64_t radius, std::uint64_t seed)
    {
        if (radius <= 0)
        {
            throw Error(ErrorCode::BadRadii, "occupancy radius must be > 0");
        }
        OccupationStats out;
        out.steps = steps;
        Rng rng = Rng::for_stream(seed, 0);
        std::vector<std::int64_t> x(params.n, 0);
        std::uint64_t inside = 0;
        for (std::uint64_t s = 0; s < steps; ++s)
        {
            sample_step_inplace(params, x, rng);
            std::int64_t excursion = 0;
            for (std::size_t k = 1; k < params.n; ++k)
            {
                excursion = std::max<std::int64_t>(excursion, std::llabs(x[k] - x[0]));
            }
            out.max_excursion = std::max(out.max_excursion, excursion);
            if (excursion <= radius)
            {
                ++inside;
            }
        }
        if (steps > 0)
        {
            out.occupancy = static_cast<double>(inside) / static_cast<double>(steps);
        }
        out.final_y = to_relative(AbsoluteState{x});
        return out;
    }
} // namespace cascade
