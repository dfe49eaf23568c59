#include "cascade/kernel.hpp"

#include <cmath>

namespace cascade
{
    namespace detail
    {
        void throw_underflow()
        {
            throw Error(ErrorCode::Underflow, "rollback outcome probability below 1e-300");
        }
    } // namespace detail

    namespace
    {
        void require_length(const CascadeParams &params, std::size_t got, std::size_t want)
        {
            if (got != want)
            {
                throw Error(ErrorCode::LengthMismatch, "state has " + std::to_string(got) + " coordinates, model needs " +
                                                           std::to_string(want) + " (n = " + std::to_string(params.n) + ")");
            }
        }

        template <class State>
        void merge_targets(TransitionList<State> &list)
        {
            auto &e = list.entries;
            std::sort(e.begin(), e.end(), [](const auto &l, const auto &r)
                      { return l.target < r.target; });
            std::size_t out = 0;
            for (std::size_t i = 0; i < e.size(); ++i)
            {
                if (out > 0 && e[out - 1].target == e[i].target)
                {
                    e[out - 1].free_mass += e[i].free_mass;
                    e[out - 1].rollback_mass += e[i].rollback_mass;
                }
                else
                {
                    if (out != i)
                    {
                        e[out] = std::move(e[i]);
                    }
                    ++out;
                }
            }
            e.resize(out);
        }

        void add(AbsoluteTransitions &list, std::span<const std::int64_t> target, double p, TransitionKind kind)
        {
            switch (kind)
            {
            case TransitionKind::SelfLoop:
                list.self_loop += p;
                break;
            case TransitionKind::Free:
                list.entries.push_back({AbsoluteState{{target.begin(), target.end()}}, p, 0.0});
                break;
            case TransitionKind::Rollback:
                list.entries.push_back({AbsoluteState{{target.begin(), target.end()}}, 0.0, p});
                break;
            }
        }
    } // namespace

    RelativeState to_relative(const AbsoluteState &state)
    {
        RelativeState r;
        if (state.x.empty())
        {
            return r;
        }
        r.y.reserve(state.x.size() - 1);
        for (std::size_t k = 1; k < state.x.size(); ++k)
        {
            r.y.push_back(state.x[k] - state.x[0]);
        }
        return r;
    }

    AbsoluteState to_absolute(const RelativeState &state, std::int64_t x0)
    {
        AbsoluteState a;
        a.x.reserve(state.y.size() + 1);
        a.x.push_back(x0);
        for (auto v : state.y)
        {
            a.x.push_back(x0 + v);
        }
        return a;
    }

    AbsoluteTransitions enumerate_transitions(const CascadeParams &params, const AbsoluteState &x)
    {
        require_length(params, x.x.size(), params.n);
        AbsoluteTransitions out;
        for_each_transition(params, x.x, [&](std::span<const std::int64_t> t, double p, TransitionKind kind)
                            { add(out, t, p, kind); });
        merge_targets(out);
        return out;
    }

    AbsoluteTransitions rollback_outcomes(const CascadeParams &params, const AbsoluteState &x, std::size_t j)
    {
        require_length(params, x.x.size(), params.n);
        if (j + 1 >= params.n)
        {
            throw Error(ErrorCode::IndexOutOfRange, "link " + std::to_string(j) + " does not exist");
        }
        if (x.x[j + 1] <= x.x[j])
        {
            throw Error(ErrorCode::EmptyRollback, "recipient is not ahead of the sender");
        }
        AbsoluteTransitions out;
        for_each_rollback_outcome(params, x.x, j, [&](std::span<const std::int64_t> t, double p)
                                  { add(out, t, p, TransitionKind::Rollback); });
        merge_targets(out);
        return out;
    }

    RelativeTransitions relative_transitions(const CascadeParams &params, const RelativeState &y)
    {
        require_length(params, y.y.size(), params.n - 1);
        const AbsoluteState x = to_absolute(y);
        RelativeTransitions out;
        for_each_transition(params, x.x, [&](std::span<const std::int64_t> t, double p, TransitionKind kind)
                            {
                                if (kind == TransitionKind::SelfLoop)
                                {
                                    out.self_loop += p;
                                    return;
                                }
                                RelativeState r;
                                r.y.reserve(t.size() - 1);
                                for (std::size_t k = 1; k < t.size(); ++k)
                                {
                                    r.y.push_back(t[k] - t[0]);
                                }
                                if (kind == TransitionKind::Free)
                                {
                                    out.entries.push_back({std::move(r), p, 0.0});
                                }
                                else
                                {
                                    out.entries.push_back({std::move(r), 0.0, p});
                                } });
        merge_targets(out);
        return out;
    }

    RelativeTransitions rollback_table_n3(const CascadeParams &params, const RelativeState &y)
    {
        if (params.n != 3)
        {
            throw Error(ErrorCode::LengthMismatch, "the rollback table describes three processors");
        }
        require_length(params, y.y.size(), 2);
        const std::int64_t y2 = y.y[0];
        const std::int64_t y3 = y.y[1];
        const double beta12 = params.betas[0] / params.z;
        const double beta23 = params.betas[1] / params.z;
        const double b2 = params.b[1];

        RelativeTransitions out;
        auto put = [&](std::int64_t z2, std::int64_t z3, double p)
        {
            if (p > 0.0)
            {
                out.entries.push_back({RelativeState{{z2, z3}}, 0.0, p});
            }
        };

        // sender 1 -> 2 alone: processor 3 is not ahead of any eliminated payload.
        if (y2 > 0 && y3 <= 0)
        {
            put(0, y3, beta12);
        }
        // sender 2 -> 3
        if (y2 < y3)
        {
            put(y2, y2, beta23);
        }
        // 1 -> 2 -> 3 with 0 < y3 <= y2
        if (y3 > 0 && y3 <= y2)
        {
            for (std::int64_t z3 = 0; z3 < y3; ++z3)
            {
                put(0, z3, beta12 * std::pow(1.0 - b2, static_cast<double>(z3)) * b2);
            }
            put(0, y3, beta12 * std::pow(1.0 - b2, static_cast<double>(y3)));
        }
        // 1 -> 2 -> 3 with 0 < y2 < y3
        if (y2 > 0 && y2 < y3)
        {
            for (std::int64_t z3 = 0; z3 <= y2; ++z3)
            {
                put(0, z3, beta12 * std::pow(1.0 - b2, static_cast<double>(z3)) * b2);
            }
            put(0, y3, beta12 * std::pow(1.0 - b2, static_cast<double>(y2 + 1)));
        }
        std::sort(out.entries.begin(), out.entries.end(), [](const auto &l, const auto &r)
                  { return l.target < r.target; });
        return out;
    }

    double marginal_residual(const CascadeParams &params, const AbsoluteState &x, std::size_t n1)
    {
        require_length(params, x.x.size(), params.n);
        const CascadeParams sub = prefix(params, n1);
        const AbsoluteState head{{x.x.begin(), x.x.begin() + static_cast<std::ptrdiff_t>(n1)}};

        // Project the full chain onto the first n1 coordinates and keep the
        // steps that move them; rescaled by z / z1 they must be the steps of
        // the smaller chain.
        AbsoluteTransitions projected;
        const double scale = params.z / sub.z;
        for_each_transition(params, x.x, [&](std::span<const std::int64_t> t, double p, TransitionKind kind)
                            {
                                if (!std::equal(head.x.begin(), head.x.end(), t.begin()))
                                {
                                    add(projected, t.first(n1), p * scale, kind);
                                } });
        merge_targets(projected);

        AbsoluteTransitions direct = enumerate_transitions(sub, head);
        std::erase_if(direct.entries, [&](const auto &e)
                      { return e.target == head; });

        double worst = 0.0;
        std::size_t i = 0;
        std::size_t k = 0;
        // Both lists are sorted by target.
        while (i < projected.entries.size() || k < direct.entries.size())
        {
            const bool take_p = k == direct.entries.size() ||
                                (i < projected.entries.size() && projected.entries[i].target < direct.entries[k].target);
            const bool take_d = i == projected.entries.size() ||
                                (k < direct.entries.size() && direct.entries[k].target < projected.entries[i].target);
            if (take_p)
            {
                worst = std::max({worst, projected.entries[i].free_mass, projected.entries[i].rollback_mass});
                ++i;
            }
            else if (take_d)
            {
                worst = std::max({worst, direct.entries[k].free_mass, direct.entries[k].rollback_mass});
                ++k;
            }
            else
            {
                worst = std::max({worst, std::abs(projected.entries[i].free_mass - direct.entries[k].free_mass),
                                  std::abs(projected.entries[i].rollback_mass - direct.entries[k].rollback_mass)});
                ++i;
                ++k;
            }
        }
        return worst;
    }

    void sample_step_inplace(const CascadeParams &params, std::span<std::int64_t> x, Rng &rng)
    {
        const std::size_t n = params.n;
        double u = rng.uniform() * params.z;
        for (std::size_t k = 0; k < n; ++k)
        {
            if (u < params.lambdas[k])
            {
                x[k] += 1;
                return;
            }
            u -= params.lambdas[k];
        }
        // Fall-through guards against rounding in the subtraction chain.
        std::size_t j = n >= 2 ? n - 2 : 0;
        for (std::size_t l = 0; l + 1 < n; ++l)
        {
            if (u < params.betas[l])
            {
                j = l;
                break;
            }
            u -= params.betas[l];
        }
        if (n < 2 || params.betas[j] <= 0.0 || x[j + 1] <= x[j])
        {
            return;
        }

        // Cascade: recipient q restarts at w; the next processor is hit at the
        // first position in [w, min(old x_q, x_{q+1} - 1)] holding a message.
        std::int64_t w = x[j];
        std::int64_t old_q = x[j + 1];
        x[j + 1] = w;
        for (std::size_t q = j + 1; q + 1 < n; ++q)
        {
            const std::int64_t upper = std::min(old_q, x[q + 1] - 1);
            const std::int64_t count = upper - w + 1;
            if (count <= 0)
            {
                return;
            }
            const std::int64_t k = rng.geometric_failures(params.b[q]);
            if (k >= count)
            {
                return;
            }
            w += k;
            old_q = x[q + 1];
            x[q + 1] = w;
        }
    }

    AbsoluteState sample_step(const CascadeParams &params, const AbsoluteState &x, Rng &rng)
    {
        require_length(params, x.x.size(), params.n);
        AbsoluteState next = x;
        sample_step_inplace(params, next.x, rng);
        return next;
    }
} // namespace cascade
