#pragma once

#include "cascade/kernel.hpp"
#include "cascade/model.hpp"
#include "cascade/rng.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace cascade
{
    /// One-step drift of a test function at a relative state, split by the
    /// event that produced each transition.
    struct DriftParts
    {
        double full = 0.0;
        double free = 0.0;
        double rollback = 0.0;
        /// E f(Y(n+1)) given Y(n) = y.
        double expected_next = 0.0;
    };

    /// Exact drift sum_z p_yz (f(z) - f(y)) over the relative chain; f is
    /// called as f(std::span<const std::int64_t>) on relative coordinates.
    template <class F>
    DriftParts exact_drift(const CascadeParams &params, std::span<const std::int64_t> y, F &&f)
    {
        std::vector<std::int64_t> x(y.size() + 1, 0);
        std::copy(y.begin(), y.end(), x.begin() + 1);
        std::vector<std::int64_t> rel(y.size());
        const double fy = f(y);
        DriftParts out;
        for_each_transition(params, x, [&](std::span<const std::int64_t> t, double p, TransitionKind kind)
                            {
                                if (kind == TransitionKind::SelfLoop)
                                {
                                    return;
                                }
                                for (std::size_t k = 0; k < rel.size(); ++k)
                                {
                                    rel[k] = t[k + 1] - t[0];
                                }
                                const double d = p * (f(std::span<const std::int64_t>(rel)) - fy);
                                if (kind == TransitionKind::Free)
                                {
                                    out.free += d;
                                }
                                else
                                {
                                    out.rollback += d;
                                } });
        out.full = out.free + out.rollback;
        out.expected_next = fy + out.full;
        return out;
    }

    struct MeanJump
    {
        std::vector<double> full;
        /// Tick transitions only.
        std::vector<double> free;
    };

    MeanJump mean_jump(const CascadeParams &params, const RelativeState &y);

    using TestFunction = std::function<double(std::span<const std::int64_t>)>;

    /// Truncated state space a criterion is checked on.
    struct CheckDomain
    {
        enum class Shape
        {
            Box,   // max_k |y_k| <= radius
            Level, // f(y) <= radius, enumerated inside the box of half-width box_half_width
        };
        Shape shape = Shape::Box;
        double radius = 0.0;
        std::int64_t box_half_width = 0;

        static CheckDomain box(std::int64_t radius) { return {Shape::Box, static_cast<double>(radius), radius}; }
        static CheckDomain level(double radius, std::int64_t box_half_width) { return {Shape::Level, radius, box_half_width}; }
    };

    struct DriftCheckResult
    {
        std::size_t domain_size = 0;
        /// Max drift over examined states outside the finite set (NaN if none).
        double worst_drift = std::nan("");
        std::vector<std::int64_t> worst_state;
        std::size_t finite_set_size = 0;
        /// Radius of the finite set in the domain's gauge (Box: sup norm, Level: f).
        double finite_set_radius = 0.0;
        /// sup of E f(next) over the finite set.
        double finite_set_sup = 0.0;
        double epsilon = 0.0;
        bool verdict = false;
        std::string note;
    };

    struct FosterOptions
    {
        /// Fixed finite set {gauge <= finite_radius}. When absent the finite
        /// set is the smallest such set containing every state with drift >= 0,
        /// and the check also requires it to fit within half the domain radius.
        std::optional<double> finite_radius;
        unsigned threads = 0;
    };

    /// Foster criterion on a truncation: the verdict is "verified on this
    /// domain", never a proof.
    DriftCheckResult foster_check(const CascadeParams &params, const TestFunction &f, const CheckDomain &domain,
                                  const FosterOptions &options = {});

    /// Transience criterion for the two-processor relative chain with
    /// f(y) = min(exp(delta y), 1) and A = {y >= 0}, checked on [-radius, radius].
    /// Throws Error{AssumptionViolated} unless n == 2.
    DriftCheckResult transience_check(const CascadeParams &params, double delta, std::int64_t radius);

    /// First delta in 1, 1/2, 1/4, ... (at most max_halvings halvings) that passes.
    std::optional<double> find_transience_delta(const CascadeParams &params, std::int64_t radius, int max_halvings = 30);

    /// Message flow of the larger-rate model together with its thinning:
    /// each point is kept for the smaller-rate model with probability
    /// rate_lo / rate_hi.
    class ThinnedFlow
    {
    public:
        ThinnedFlow(double rate_lo, double rate_hi);

        double rate_hi() const { return m_rate_hi; }
        /// Time until the next point of the larger flow.
        double next_gap(Rng &rng) const;
        bool keep(Rng &rng) const;

    private:
        double m_rate_hi;
        double m_keep;
    };

    struct CouplingReport
    {
        std::size_t runs = 0;
        /// Event times at which x_lo >= x_hi failed componentwise, over all runs.
        std::uint64_t dominance_violations = 0;
        std::size_t violating_runs = 0;
        std::optional<double> first_violation_time;
        std::uint64_t events = 0;
    };

    /// Runs both event simulations on one probability space: shared tick
    /// flows and hi-rate message flows thinned for lo. lo must have the same
    /// lambdas and betas no larger than hi. Run r uses stream r of the seed.
    /// Throws Error{ParamMismatch}.
    CouplingReport coupled_run(const CascadeParams &lo, const CascadeParams &hi, double horizon, std::uint64_t seed,
                               std::size_t runs = 1);

    /// Copy of params with the listed links silenced (0-based link q joins
    /// processors q and q+1). Throws Error{IndexOutOfRange}.
    CascadeParams with_barriers(const CascadeParams &params, const std::set<std::size_t> &links);
} // namespace cascade
