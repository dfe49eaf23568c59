#pragma once

#include "cascade/error.hpp"
#include "cascade/model.hpp"
#include "cascade/rng.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace cascade
{
    /// Local times x_0..x_{n-1} of the processors.
    struct AbsoluteState
    {
        std::vector<std::int64_t> x;
        friend auto operator<=>(const AbsoluteState &, const AbsoluteState &) = default;
    };

    /// Local times seen from processor 0: y_k = x_{k+1} - x_0, k = 0..n-2.
    struct RelativeState
    {
        std::vector<std::int64_t> y;
        friend auto operator<=>(const RelativeState &, const RelativeState &) = default;
    };

    RelativeState to_relative(const AbsoluteState &state);
    AbsoluteState to_absolute(const RelativeState &state, std::int64_t x0 = 0);

    enum class TransitionKind
    {
        Free,     // a local-time tick
        Rollback, // an effective message and its cascade
        SelfLoop, // an ineffective message
    };

    /// One target and its probability split into the tick part and the
    /// rollback part; distinct events may land on the same target in
    /// relative coordinates, hence two masses.
    template <class State>
    struct Transition
    {
        State target;
        double free_mass = 0.0;
        double rollback_mass = 0.0;

        double probability() const { return free_mass + rollback_mass; }
    };

    template <class State>
    struct TransitionList
    {
        std::vector<Transition<State>> entries;
        double self_loop = 0.0;

        double entry_mass() const
        {
            double s = 0.0;
            for (const auto &e : entries)
            {
                s += e.probability();
            }
            return s;
        }
        double total_mass() const { return entry_mass() + self_loop; }

        /// Probability of a target (self-loop mass is not included unless the
        /// list carries an explicit entry for it).
        double mass_of(const State &target) const
        {
            for (const auto &e : entries)
            {
                if (e.target == target)
                {
                    return e.probability();
                }
            }
            return 0.0;
        }
    };

    using AbsoluteTransitions = TransitionList<AbsoluteState>;
    using RelativeTransitions = TransitionList<RelativeState>;

    /// Smallest mass a rollback outcome may carry before the kernel refuses to
    /// continue rather than silently lose it.
    inline constexpr double kUnderflowFloor = 1e-300;

    namespace detail
    {
        [[noreturn]] void throw_underflow();

        template <class Visit>
        void rollback_stage(const CascadeParams &params, std::span<const std::int64_t> x, std::vector<std::int64_t> &target,
                            std::size_t q, double mass, Visit &visit)
        {
            const std::size_t n = params.n;
            if (q + 1 == n)
            {
                visit(std::span<const std::int64_t>(target), mass);
                return;
            }
            const std::int64_t w = target[q];
            const std::int64_t upper = std::min(x[q], x[q + 1] - 1);
            // Empty position range means the cascade stops with probability 1.
            const std::int64_t count = std::max<std::int64_t>(upper - w + 1, 0);
            const double b = params.b[q];

            double stop_mass = mass;
            if (count > 0)
            {
                if (b >= 1.0)
                {
                    stop_mass = 0.0;
                }
                else if (b > 0.0)
                {
                    stop_mass = mass * std::pow(1.0 - b, static_cast<double>(count));
                    if (stop_mass < kUnderflowFloor)
                    {
                        throw_underflow();
                    }
                }
            }
            if (stop_mass > 0.0)
            {
                visit(std::span<const std::int64_t>(target), stop_mass);
            }
            if (b <= 0.0 || count == 0)
            {
                return;
            }

            double term = mass * b;
            for (std::int64_t v = w; v <= upper; ++v)
            {
                if (term < kUnderflowFloor)
                {
                    throw_underflow();
                }
                target[q + 1] = v;
                rollback_stage(params, x, target, q + 1, term, visit);
                if (b >= 1.0)
                {
                    break;
                }
                term *= 1.0 - b;
            }
            target[q + 1] = x[q + 1];
        }
    } // namespace detail

    /// Visits every rollback outcome of a message on link j (processor j to
    /// j+1) from absolute state x, as visit(target, probability). Outcomes of
    /// distinct admissible position sequences are visited separately; their
    /// probabilities sum to beta_j / z. Requires x[j+1] > x[j].
    template <class Visit>
    void for_each_rollback_outcome(const CascadeParams &params, std::span<const std::int64_t> x, std::size_t j, Visit &&visit)
    {
        if (params.betas[j] <= 0.0)
        {
            return;
        }
        std::vector<std::int64_t> target(x.begin(), x.end());
        target[j + 1] = x[j];
        detail::rollback_stage(params, x, target, j + 1, params.betas[j] / params.z, visit);
    }

    /// Visits every one-step transition of the embedded chain from x as
    /// visit(target, probability, kind). Ineffective messages are reported
    /// with kind SelfLoop and target x.
    template <class Visit>
    void for_each_transition(const CascadeParams &params, std::span<const std::int64_t> x, Visit &&visit)
    {
        const std::size_t n = params.n;
        std::vector<std::int64_t> target(x.begin(), x.end());
        for (std::size_t k = 0; k < n; ++k)
        {
            target[k] += 1;
            visit(std::span<const std::int64_t>(target), params.lambdas[k] / params.z, TransitionKind::Free);
            target[k] -= 1;
        }
        for (std::size_t j = 0; j + 1 < n; ++j)
        {
            if (params.betas[j] <= 0.0)
            {
                continue;
            }
            if (x[j + 1] > x[j])
            {
                for_each_rollback_outcome(params, x, j, [&](std::span<const std::int64_t> t, double p)
                                          { visit(t, p, TransitionKind::Rollback); });
            }
            else
            {
                visit(x, params.betas[j] / params.z, TransitionKind::SelfLoop);
            }
        }
    }

    AbsoluteTransitions enumerate_transitions(const CascadeParams &params, const AbsoluteState &x);

    /// Rollback part of a message on link j, merged by target.
    /// Throws Error{EmptyRollback} if x[j+1] <= x[j], Error{IndexOutOfRange}
    /// if j is not a link.
    AbsoluteTransitions rollback_outcomes(const CascadeParams &params, const AbsoluteState &x, std::size_t j);

    RelativeTransitions relative_transitions(const CascadeParams &params, const RelativeState &y);

    /// Rollback transitions of the three-processor relative chain written out
    /// case by case (sender 0 alone, sender 1, and the two cascade regimes),
    /// independent of the generic cascade enumeration.
    RelativeTransitions rollback_table_n3(const CascadeParams &params, const RelativeState &y);

    /// Largest absolute difference between the moves of the first n1
    /// processors under the full kernel, rescaled by z / z1, and the kernel of
    /// prefix(params, n1) from the same local times. Zero up to rounding.
    double marginal_residual(const CascadeParams &params, const AbsoluteState &x, std::size_t n1);

    template <class State>
    std::pair<TransitionList<State>, TransitionList<State>> split_transitions(const TransitionList<State> &t)
    {
        TransitionList<State> free_part;
        TransitionList<State> rollback_part;
        for (const auto &e : t.entries)
        {
            if (e.free_mass > 0.0)
            {
                free_part.entries.push_back({e.target, e.free_mass, 0.0});
            }
            if (e.rollback_mass > 0.0)
            {
                rollback_part.entries.push_back({e.target, 0.0, e.rollback_mass});
            }
        }
        return {std::move(free_part), std::move(rollback_part)};
    }

    /// Draws one step of the embedded chain: the event by its rate, then the
    /// cascade stage by stage. In distribution this equals sampling from
    /// enumerate_transitions(params, x).
    void sample_step_inplace(const CascadeParams &params, std::span<std::int64_t> x, Rng &rng);

    AbsoluteState sample_step(const CascadeParams &params, const AbsoluteState &x, Rng &rng);
} // namespace cascade
