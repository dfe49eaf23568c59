#include "cascade/lyapunov.hpp"

#include "cascade/error.hpp"
#include "cascade/kernel.hpp"
#include "cascade/parallel.hpp"
#include "cascade/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cascade
{
    double Contour::ellipse(Point y) const
    {
        const double d = y.y2 - y.y3;
        return a * y.y2 * y.y2 + b * d * d;
    }

    Point Contour::ellipse_gradient(Point y) const
    {
        const double d = y.y2 - y.y3;
        return {2.0 * (a * y.y2 + b * d), -2.0 * b * d};
    }

    double Contour::max_radius() const
    {
        // Smallest eigenvalue of the quadratic form gives the longest semi-axis.
        const double tr = a + 2.0 * b;
        const double det = a * b;
        const double lmin = 0.5 * (tr - std::sqrt(tr * tr - 4.0 * det));
        return std::max({u2, u3, std::hypot(t2.y2, t2.y3), std::hypot(t3.y2, t3.y3), 1.0 / std::sqrt(lmin)});
    }

    namespace
    {
        // Tangency point of the ellipse with outward normal n, and the support value <n, T>.
        std::pair<Point, double> tangency(double a, double b, Point n)
        {
            // Inverse of [[a+b, -b], [-b, b]] is [[b, b], [b, a+b]] / (ab).
            const Point qn{(b * n.y2 + b * n.y3) / (a * b), (b * n.y2 + (a + b) * n.y3) / (a * b)};
            const double u = std::sqrt(dot(n, qn));
            return {{qn.y2 / u, qn.y3 / u}, u};
        }

        Point unit(Point v)
        {
            const double r = std::hypot(v.y2, v.y3);
            return {v.y2 / r, v.y3 / r};
        }
    } // namespace

    Contour build_contour(double a, double b, double delta)
    {
        if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        {
            throw Error(ErrorCode::BadRadii, "ellipse coefficients must be finite and > 0");
        }
        if (!std::isfinite(delta) || !(delta > 1.0 + a / b))
        {
            throw Error(ErrorCode::BadQuadrant, "delta must exceed 1 + a/b, got " + std::to_string(delta));
        }
        Contour c;
        c.a = a;
        c.b = b;
        c.delta = delta;
        std::tie(c.t2, c.u2) = tangency(a, b, c.normal_t2());
        std::tie(c.t3, c.u3) = tangency(a, b, c.normal_t3());
        if (!(c.t3.y2 < 0.0 && c.t3.y3 < 0.0) || !(c.t2.y3 < 0.0))
        {
            throw Error(ErrorCode::BadQuadrant, "tangency points outside their quadrants");
        }
        const double s = 1.0 / std::sqrt(a);
        c.y3_star = {-s, -s};
        const double y2 = -1.0 / std::sqrt(a * (1.0 + a / b));
        c.y2_star = {y2, (a + b) / b * y2};
        return c;
    }

    double auto_tune_delta(const CascadeParams &params, double a, double b)
    {
        if (params.n != 3)
        {
            throw Error(ErrorCode::LengthMismatch, "the contour is defined for three processors");
        }
        const auto &l = params.lambdas;
        if (!(l[0] < l[1]) || !(l[0] < l[2]))
        {
            throw Error(ErrorCode::AssumptionViolated, "needs lambda_1 < lambda_2 and lambda_1 < lambda_3");
        }
        const Point mf = unit({l[1] - l[0], l[2] - l[0]});
        constexpr double margin = 0.1;
        for (double delta = 1.0; delta <= 0x1.0p40; delta *= 2.0)
        {
            Contour c;
            try
            {
                c = build_contour(a, b, delta);
            }
            catch (const Error &)
            {
                continue;
            }
            if (dot(mf, unit(c.normal_t2())) <= -margin && dot(mf, unit(c.normal_t3())) <= -margin)
            {
                return delta;
            }
        }
        throw Error(ErrorCode::AssumptionViolated, "no delta found by the doubling search");
    }

    Sector sector_of(const Contour &c, Point y)
    {
        if (y.y2 == 0.0 && y.y3 == 0.0)
        {
            return Sector::Origin;
        }
        if (y.y2 >= 0.0 && y.y3 >= 0.0)
        {
            return Sector::Chord;
        }
        if (y.y3 < 0.0 && cross(c.t2, y) >= 0.0)
        {
            return Sector::Segment2;
        }
        if (y.y2 < 0.0 && cross(y, c.t3) >= 0.0)
        {
            return Sector::Segment3;
        }
        return Sector::Arc;
    }

    double phi(const Contour &c, Point y)
    {
        switch (sector_of(c, y))
        {
        case Sector::Origin:
            return 0.0;
        case Sector::Chord:
            return y.y2 / c.u2 + y.y3 / c.u3;
        case Sector::Segment2:
            return (y.y2 - c.delta * y.y3) / c.u2;
        case Sector::Segment3:
            return (y.y3 - c.delta * y.y2) / c.u3;
        case Sector::Arc:
            break;
        }
        return std::sqrt(c.ellipse(y));
    }

    double phi(const Contour &c, std::span<const std::int64_t> y)
    {
        return phi(c, Point{static_cast<double>(y[0]), static_cast<double>(y[1])});
    }

    Point grad_phi(const Contour &c, Point y)
    {
        switch (sector_of(c, y))
        {
        case Sector::Origin:
            throw Error(ErrorCode::UndefinedAtCorner, "gradient undefined at the origin");
        case Sector::Chord:
            if (y.y2 == 0.0 || y.y3 == 0.0)
            {
                throw Error(ErrorCode::UndefinedAtCorner, "ray through K2 or K3");
            }
            return {1.0 / c.u2, 1.0 / c.u3};
        case Sector::Segment2:
            return {1.0 / c.u2, -c.delta / c.u2};
        case Sector::Segment3:
            return {-c.delta / c.u3, 1.0 / c.u3};
        case Sector::Arc:
            break;
        }
        const double r = std::sqrt(c.ellipse(y));
        const Point g = c.ellipse_gradient(y);
        return {0.5 * g.y2 / r, 0.5 * g.y3 / r};
    }

    Point contour_normal(const Contour &c, Point y) { return unit(grad_phi(c, y)); }

    int ray_intersections(const Contour &c, double theta)
    {
        const Point d{std::cos(theta), std::sin(theta)};
        std::vector<Point> hits;
        constexpr double tol = 1e-9;

        const double r = 1.0 / std::sqrt(c.ellipse(d));
        const Point p{r * d.y2, r * d.y3};
        if (cross(c.t2, p) <= tol && cross(p, c.t3) <= tol)
        {
            hits.push_back(p);
        }

        const std::array<std::pair<Point, Point>, 3> segments{{{c.k3(), c.k2()}, {c.k2(), c.t2}, {c.t3, c.k3()}}};
        for (const auto &[from, to] : segments)
        {
            // r d = from + s (to - from), solved by Cramer's rule.
            const Point e{to.y2 - from.y2, to.y3 - from.y3};
            const double den = cross(d, e);
            if (std::abs(den) < 1e-15)
            {
                continue;
            }
            const double s = cross(from, d) / den;
            const double rr = cross(from, e) / den;
            if (s >= -tol && s <= 1.0 + tol && rr > 0.0)
            {
                hits.push_back({rr * d.y2, rr * d.y3});
            }
        }

        int distinct = 0;
        for (std::size_t i = 0; i < hits.size(); ++i)
        {
            bool seen = false;
            for (std::size_t j = 0; j < i && !seen; ++j)
            {
                seen = std::hypot(hits[i].y2 - hits[j].y2, hits[i].y3 - hits[j].y3) < 1e-7;
            }
            distinct += seen ? 0 : 1;
        }
        return distinct;
    }

    std::array<double, 2> normal_decomposition(const Contour &c, Point y)
    {
        const Point n = contour_normal(c, y);
        const Point n2 = unit(c.normal_t2());
        const Point n3 = unit(c.normal_t3());
        const double det = cross(n2, n3);
        return {cross(n, n3) / det, cross(n2, n) / det};
    }

    double linearization_constant(const Contour &c, double scale, int angular_samples)
    {
        const double from = std::atan2(c.t2.y3, c.t2.y2);
        double to = std::atan2(c.t3.y3, c.t3.y2);
        // The arc runs clockwise from T2 to T3.
        if (to > from)
        {
            to -= 2.0 * std::numbers::pi;
        }
        double worst = 0.0;
        for (int i = 1; i < angular_samples; ++i)
        {
            const double theta = from + (to - from) * i / angular_samples;
            const Point d{std::cos(theta), std::sin(theta)};
            const double pd = phi(c, d);
            const Point y{scale * d.y2 / pd, scale * d.y3 / pd};
            const Point g = grad_phi(c, y);
            for (int i2 = -3; i2 <= 3; ++i2)
            {
                for (int i3 = -3; i3 <= 3; ++i3)
                {
                    const double dist2 = static_cast<double>(i2 * i2 + i3 * i3);
                    if (dist2 == 0.0 || dist2 > 9.0)
                    {
                        continue;
                    }
                    const Point w{y.y2 + i2, y.y3 + i3};
                    worst = std::max(worst, std::abs(phi(c, w) - dot(g, w)) * scale / dist2);
                }
            }
        }
        return worst;
    }

    Region classify(std::int64_t y2, std::int64_t y3)
    {
        if (y2 == 0 && y3 == 0)
        {
            return Region::Origin;
        }
        if (y2 > 0 && y3 > 0)
        {
            return Region::E1;
        }
        if (y2 > 0 && y3 == 0)
        {
            return Region::EAxisY2;
        }
        if (y2 == 0 && y3 > 0)
        {
            return Region::EAxisY3;
        }
        if (y2 < 0 && y3 > y2)
        {
            return Region::E3;
        }
        return Region::EMinus;
    }

    std::string_view region_name(Region r)
    {
        switch (r)
        {
        case Region::Origin:
            return "origin";
        case Region::E1:
            return "E_1";
        case Region::EAxisY2:
            return "E_axis_y2";
        case Region::EAxisY3:
            return "E_axis_y3";
        case Region::E3:
            return "E_3";
        case Region::EMinus:
            return "E_minus";
        }
        return "?";
    }

    namespace
    {
        struct RowTally
        {
            std::array<RegionDrift, 6> regions;
            std::size_t annulus = 0;
            double worst = -std::numeric_limits<double>::infinity();
            std::array<std::int64_t, 2> worst_state{};
            std::size_t finite = 0;
            double finite_sup = 0.0;
            std::size_t increases = 0;
        };
    } // namespace

    DriftReport drift_report(const CascadeParams &params, const Contour &contour, double c0, double c1, unsigned threads)
    {
        if (!(c0 > 0.0) || !(c1 > c0) || !std::isfinite(c1))
        {
            throw Error(ErrorCode::BadRadii, "needs 0 < c0 < c1");
        }
        if (params.n != 3)
        {
            throw Error(ErrorCode::LengthMismatch, "the contour is defined for three processors");
        }
        const auto &l = params.lambdas;
        if (!(l[0] < l[1]) || !(l[0] < l[2]))
        {
            throw Error(ErrorCode::AssumptionViolated, "needs lambda_1 < lambda_2 and lambda_1 < lambda_3");
        }

        DriftReport rep;
        rep.contour = contour;
        rep.c0 = c0;
        rep.c1 = c1;
        rep.box_half_width = static_cast<std::int64_t>(std::ceil(c1 * contour.max_radius())) + 1;
        const std::int64_t w = rep.box_half_width;
        for (std::size_t i = 0; i < kRegions.size(); ++i)
        {
            rep.regions[i].region = kRegions[i];
        }

        auto f = [&contour](std::span<const std::int64_t> y) { return phi(contour, y); };
        const auto rows = static_cast<std::size_t>(2 * w + 1);
        std::vector<RowTally> tallies(rows);
        parallel_for(rows, threads, [&](std::size_t row)
                     {
            RowTally &t = tallies[row];
            for (std::size_t i = 0; i < kRegions.size(); ++i)
            {
                t.regions[i].region = kRegions[i];
            }
            std::array<std::int64_t, 2> y{-w + static_cast<std::int64_t>(row), 0};
            std::array<std::int64_t, 3> x{};
            for (y[1] = -w; y[1] <= w; ++y[1])
            {
                const double py = f(y);
                if (py > c1)
                {
                    continue;
                }
                const auto parts = exact_drift(params, y, f);
                if (py <= c0)
                {
                    ++t.finite;
                    t.finite_sup = std::max(t.finite_sup, parts.expected_next);
                    continue;
                }
                ++t.annulus;
                const Region region = classify(y[0], y[1]);
                auto &rd = t.regions[static_cast<std::size_t>(region)];
                ++rd.count;
                if (parts.full > rd.max_full)
                {
                    rd.max_full = parts.full;
                    rd.worst_state = y;
                }
                rd.max_free = std::max(rd.max_free, parts.free);
                rd.max_rollback = std::max(rd.max_rollback, parts.rollback);
                if (parts.full > t.worst)
                {
                    t.worst = parts.full;
                    t.worst_state = y;
                }
                if (std::min(y[0], y[1]) < 0)
                {
                    x = {0, y[0], y[1]};
                    bool increased = false;
                    for_each_transition(params, x, [&](std::span<const std::int64_t> z, double, TransitionKind kind)
                                        {
                        if (kind == TransitionKind::Rollback)
                        {
                            const std::array<std::int64_t, 2> rel{z[1] - z[0], z[2] - z[0]};
                            increased = increased || f(rel) > py + 1e-9 * py;
                        } });
                    t.increases += increased ? 1 : 0;
                }
            } });

        for (const auto &t : tallies)
        {
            for (std::size_t i = 0; i < kRegions.size(); ++i)
            {
                auto &dst = rep.regions[i];
                const auto &src = t.regions[i];
                dst.count += src.count;
                if (src.max_full > dst.max_full)
                {
                    dst.max_full = src.max_full;
                    dst.worst_state = src.worst_state;
                }
                dst.max_free = std::max(dst.max_free, src.max_free);
                dst.max_rollback = std::max(dst.max_rollback, src.max_rollback);
            }
            rep.annulus_size += t.annulus;
            if (t.worst > rep.worst_drift)
            {
                rep.worst_drift = t.worst;
                rep.worst_state = t.worst_state;
            }
            rep.finite_set_size += t.finite;
            rep.finite_set_sup = std::max(rep.finite_set_sup, t.finite_sup);
            rep.rollback_increases += t.increases;
        }
        rep.epsilon = -rep.worst_drift;
        rep.verdict = rep.annulus_size > 0 && rep.worst_drift < 0.0 && std::isfinite(rep.finite_set_sup);
        return rep;
    }
} // namespace cascade
