#include "cascade/stability.hpp"

#include "cascade/error.hpp"
#include "cascade/event_sim.hpp"
#include "cascade/parallel.hpp"

#include <algorithm>
#include <limits>

namespace cascade
{
    MeanJump mean_jump(const CascadeParams &params, const RelativeState &y)
    {
        const auto list = relative_transitions(params, y);
        const std::size_t d = y.y.size();
        MeanJump m{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
        for (const auto &e : list.entries)
        {
            for (std::size_t k = 0; k < d; ++k)
            {
                const auto jump = static_cast<double>(e.target.y[k] - y.y[k]);
                m.full[k] += jump * e.probability();
                m.free[k] += jump * e.free_mass;
            }
        }
        return m;
    }

    namespace
    {
        struct StateRecord
        {
            std::vector<std::int64_t> y;
            double gauge = 0.0;
            double drift = 0.0;
            double expected_next = 0.0;
        };

        double sup_norm(std::span<const std::int64_t> y)
        {
            std::int64_t m = 0;
            for (auto v : y)
            {
                m = std::max(m, v < 0 ? -v : v);
            }
            return static_cast<double>(m);
        }

        std::vector<StateRecord> evaluate_domain(const CascadeParams &params, const TestFunction &f, const CheckDomain &domain,
                                                 unsigned threads)
        {
            const std::size_t d = params.n - 1;
            const std::int64_t w = domain.box_half_width;
            const auto side = static_cast<std::size_t>(2 * w + 1);
            std::vector<std::vector<StateRecord>> slices(side);

            parallel_for(side, threads, [&](std::size_t slice)
                         {
                std::vector<std::int64_t> y(d, -w);
                y[0] = -w + static_cast<std::int64_t>(slice);
                auto &out = slices[slice];
                for (;;)
                {
                    const double fy = f(y);
                    const double gauge = domain.shape == CheckDomain::Shape::Box ? sup_norm(y) : fy;
                    if (gauge <= domain.radius)
                    {
                        const auto parts = exact_drift(params, y, f);
                        out.push_back({y, gauge, parts.full, parts.expected_next});
                    }
                    // Odometer over the remaining coordinates.
                    std::size_t k = 1;
                    while (k < d && y[k] == w)
                    {
                        y[k] = -w;
                        ++k;
                    }
                    if (k >= d)
                    {
                        break;
                    }
                    ++y[k];
                } });

            std::vector<StateRecord> all;
            for (auto &s : slices)
            {
                std::move(s.begin(), s.end(), std::back_inserter(all));
            }
            return all;
        }
    } // namespace

    DriftCheckResult foster_check(const CascadeParams &params, const TestFunction &f, const CheckDomain &domain,
                                  const FosterOptions &options)
    {
        if (params.n < 2)
        {
            throw Error(ErrorCode::LengthMismatch, "the relative chain needs at least two processors");
        }
        const auto records = evaluate_domain(params, f, domain, options.threads);

        DriftCheckResult r;
        r.domain_size = records.size();

        double finite_radius = -1.0;
        if (options.finite_radius)
        {
            finite_radius = *options.finite_radius;
        }
        else
        {
            for (const auto &rec : records)
            {
                if (rec.drift >= 0.0)
                {
                    finite_radius = std::max(finite_radius, rec.gauge);
                }
            }
        }
        r.finite_set_radius = std::max(finite_radius, 0.0);

        double worst = -std::numeric_limits<double>::infinity();
        bool any_outside = false;
        for (const auto &rec : records)
        {
            if (rec.gauge <= finite_radius)
            {
                ++r.finite_set_size;
                r.finite_set_sup = std::max(r.finite_set_sup, rec.expected_next);
            }
            else if (!any_outside || rec.drift > worst)
            {
                any_outside = true;
                worst = rec.drift;
                r.worst_state = rec.y;
            }
        }

        if (!any_outside)
        {
            r.note = "no examined state lies outside the finite set";
            return r;
        }
        r.worst_drift = worst;
        r.epsilon = -worst;
        const bool interior = options.finite_radius.has_value() || finite_radius <= domain.radius / 2.0;
        r.verdict = worst < 0.0 && std::isfinite(r.finite_set_sup) && interior;
        if (!interior)
        {
            r.note = "states with nonnegative drift reach the outer half of the domain";
        }
        else if (!(worst < 0.0))
        {
            r.note = "nonnegative drift outside the finite set";
        }
        else
        {
            r.note = "verified on the truncated domain";
        }
        return r;
    }

    DriftCheckResult transience_check(const CascadeParams &params, double delta, std::int64_t radius)
    {
        if (params.n != 2)
        {
            throw Error(ErrorCode::AssumptionViolated, "the exponential transience test applies to two processors");
        }
        if (!(delta > 0.0))
        {
            throw Error(ErrorCode::InvalidArgument, "delta must be > 0");
        }
        if (radius < 1)
        {
            throw Error(ErrorCode::BadRadii, "radius must be >= 1");
        }
        auto f = [delta](std::span<const std::int64_t> y)
        { return std::min(std::exp(delta * static_cast<double>(y[0])), 1.0); };

        DriftCheckResult r;
        double worst = -std::numeric_limits<double>::infinity();
        double inf_a = std::numeric_limits<double>::infinity();
        bool below = false;
        for (std::int64_t v = -radius; v <= radius; ++v)
        {
            const std::vector<std::int64_t> y{v};
            ++r.domain_size;
            if (v >= 0)
            {
                const auto parts = exact_drift(params, y, f);
                ++r.finite_set_size;
                r.finite_set_sup = std::max(r.finite_set_sup, parts.expected_next);
                inf_a = std::min(inf_a, f(y));
                continue;
            }
            const auto parts = exact_drift(params, y, f);
            if (parts.full > worst)
            {
                worst = parts.full;
                r.worst_state = y;
            }
        }
        for (std::int64_t v = -radius; v < 0; ++v)
        {
            const std::vector<std::int64_t> y{v};
            below = below || f(y) < inf_a;
        }
        r.worst_drift = worst;
        r.epsilon = -worst;
        r.verdict = worst <= 0.0 && below;
        r.note = r.verdict ? "verified on the truncated domain" : "positive drift of min(exp(delta y), 1) outside {y >= 0}";
        return r;
    }

    std::optional<double> find_transience_delta(const CascadeParams &params, std::int64_t radius, int max_halvings)
    {
        double delta = 1.0;
        for (int k = 0; k <= max_halvings; ++k, delta *= 0.5)
        {
            if (transience_check(params, delta, radius).verdict)
            {
                return delta;
            }
        }
        return std::nullopt;
    }

    ThinnedFlow::ThinnedFlow(double rate_lo, double rate_hi)
        : m_rate_hi(rate_hi), m_keep(rate_hi > 0.0 ? rate_lo / rate_hi : 0.0)
    {
        if (rate_lo < 0.0 || rate_lo > rate_hi)
        {
            throw Error(ErrorCode::ParamMismatch, "thinning needs 0 <= rate_lo <= rate_hi");
        }
    }

    double ThinnedFlow::next_gap(Rng &rng) const
    {
        return m_rate_hi > 0.0 ? rng.exponential(m_rate_hi) : std::numeric_limits<double>::infinity();
    }

    bool ThinnedFlow::keep(Rng &rng) const
    {
        if (m_keep >= 1.0)
        {
            return true;
        }
        if (m_keep <= 0.0)
        {
            return false;
        }
        return rng.uniform() < m_keep;
    }

    CouplingReport coupled_run(const CascadeParams &lo, const CascadeParams &hi, double horizon, std::uint64_t seed,
                               std::size_t runs)
    {
        if (lo.n != hi.n || lo.lambdas != hi.lambdas)
        {
            throw Error(ErrorCode::ParamMismatch, "coupled models need the same processors and lambdas");
        }
        for (std::size_t j = 0; j + 1 < lo.n; ++j)
        {
            if (lo.betas[j] > hi.betas[j])
            {
                throw Error(ErrorCode::ParamMismatch, "lo betas must not exceed hi betas");
            }
        }
        if (!(horizon > 0.0))
        {
            throw Error(ErrorCode::NonPositiveHorizon, "horizon must be > 0");
        }

        const std::size_t n = lo.n;
        constexpr double inf = std::numeric_limits<double>::infinity();
        std::vector<ThinnedFlow> flows;
        for (std::size_t j = 0; j + 1 < n; ++j)
        {
            flows.emplace_back(lo.betas[j], hi.betas[j]);
        }

        CouplingReport report;
        report.runs = runs;
        for (std::size_t run = 0; run < runs; ++run)
        {
            Rng rng = Rng::for_stream(seed, run);
            SimState a = initial_state(lo);
            SimState b = initial_state(hi);
            std::vector<double> clocks(n + flows.size());
            for (std::size_t k = 0; k < n; ++k)
            {
                clocks[k] = rng.exponential(lo.lambdas[k]);
            }
            for (std::size_t j = 0; j < flows.size(); ++j)
            {
                clocks[n + j] = flows[j].next_gap(rng);
            }

            bool violated = false;
            for (std::uint64_t events = 1;; ++events)
            {
                std::size_t flow = 0;
                for (std::size_t f = 1; f < clocks.size(); ++f)
                {
                    if (clocks[f] < clocks[flow])
                    {
                        flow = f;
                    }
                }
                const double t = clocks[flow];
                if (t > horizon || t == inf)
                {
                    break;
                }
                ++report.events;
                if (flow < n)
                {
                    apply_tick(a, flow, t);
                    apply_tick(b, flow, t);
                    clocks[flow] = t + rng.exponential(lo.lambdas[flow]);
                }
                else
                {
                    const std::size_t j = flow - n;
                    apply_message(b, j, t);
                    if (flows[j].keep(rng))
                    {
                        apply_message(a, j, t);
                    }
                    clocks[flow] = t + flows[j].next_gap(rng);
                }
                for (std::size_t k = 0; k < n; ++k)
                {
                    if (a.x.x[k] < b.x.x[k])
                    {
                        ++report.dominance_violations;
                        if (!report.first_violation_time || t < *report.first_violation_time)
                        {
                            report.first_violation_time = t;
                        }
                        violated = true;
                        break;
                    }
                }
                if ((events & 1023U) == 0)
                {
                    prune_logs(a);
                    prune_logs(b);
                }
            }
            if (violated)
            {
                ++report.violating_runs;
            }
        }
        return report;
    }

    CascadeParams with_barriers(const CascadeParams &params, const std::set<std::size_t> &links)
    {
        auto betas = params.betas;
        for (auto q : links)
        {
            if (q + 1 >= params.n)
            {
                throw Error(ErrorCode::IndexOutOfRange, "no link " + std::to_string(q));
            }
            betas[q] = 0.0;
        }
        return validate_params(params.n, params.lambdas, std::move(betas));
    }
} // namespace cascade
