#pragma once

#include "cascade/model.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

// Level-1 contour and gauge function for the three-processor relative chain.
// Points are (y2, y3) = (x2 - x1, x3 - x1) in processor-1-relative coordinates.

namespace cascade
{
    struct Point
    {
        double y2 = 0.0;
        double y3 = 0.0;
    };

    inline double dot(Point u, Point v) { return u.y2 * v.y2 + u.y3 * v.y3; }
    // Positive when v is counterclockwise from u.
    inline double cross(Point u, Point v) { return u.y2 * v.y3 - u.y3 * v.y2; }

    /// Ellipse arc e(y) = a y2^2 + b (y2 - y3)^2 = 1 from T2 to T3, closed by
    /// the tangent segments T3K3, K2T2 and the chord K3K2 across the positive
    /// quadrant. Immutable once built.
    struct Contour
    {
        double a = 1.0;
        double b = 1.0;
        double delta = 0.0;
        Point t2;
        Point t3;
        /// K2 = (u2, 0), K3 = (0, u3).
        double u2 = 0.0;
        double u3 = 0.0;
        /// Arc points whose normals are parallel to the y3 and y2 axes.
        Point y2_star;
        Point y3_star;

        Point k2() const { return {u2, 0.0}; }
        Point k3() const { return {0.0, u3}; }
        /// Outward normals of the lines K2T2 and T3K3, unnormalized.
        Point normal_t2() const { return {1.0, -delta}; }
        Point normal_t3() const { return {-delta, 1.0}; }

        double ellipse(Point y) const;
        Point ellipse_gradient(Point y) const;
        /// Largest |y| on the contour; bounds |y| <= c * max_radius() on {phi <= c}.
        double max_radius() const;
    };

    /// Throws Error{BadRadii} unless a, b > 0, and Error{BadQuadrant} when
    /// delta <= 1 + a/b (T3 would leave the open third quadrant).
    Contour build_contour(double a, double b, double delta);

    /// Smallest delta in 1, 2, 4, ... for which the contour builds and the
    /// free mean jump makes cosine <= -0.1 with both segment normals.
    /// Throws Error{AssumptionViolated} unless lambda_1 is strictly the
    /// smallest rate, Error{LengthMismatch} unless n == 3.
    double auto_tune_delta(const CascadeParams &params, double a = 1.0, double b = 1.0);

    enum class Sector
    {
        Origin,
        Chord,    // closed positive quadrant, piece K3K2
        Segment2, // piece K2T2
        Segment3, // piece T3K3
        Arc,
    };

    Sector sector_of(const Contour &c, Point y);
    double phi(const Contour &c, Point y);
    double phi(const Contour &c, std::span<const std::int64_t> y);

    /// Throws Error{UndefinedAtCorner} at the origin and on the rays through
    /// K2 and K3.
    Point grad_phi(const Contour &c, Point y);

    /// Unit outward normal of the contour at the point where the ray through
    /// y crosses it. Same corner rules as grad_phi.
    Point contour_normal(const Contour &c, Point y);

    /// Number of distinct points where the ray at angle theta meets the
    /// contour, found by intersecting with each piece separately.
    int ray_intersections(const Contour &c, double theta);

    /// Coefficients (c2, c3) with n(y) = c2 n(T2) + c3 n(T3), unit normals.
    std::array<double, 2> normal_decomposition(const Contour &c, Point y);

    /// max |phi(w) - <grad phi(y), w>| phi(y) / |w - y|^2 over arc-sector
    /// points y with phi(y) = scale and integer offsets 0 < |w - y| <= 3.
    double linearization_constant(const Contour &c, double scale, int angular_samples = 256);

    enum class Region
    {
        Origin,
        E1,      // y2 > 0, y3 > 0
        EAxisY2, // y2 > 0, y3 = 0
        EAxisY3, // y2 = 0, y3 > 0
        E3,      // y2 < 0, y3 > y2
        EMinus,  // remaining points with min(y2, y3) < 0
    };
    inline constexpr std::array<Region, 6> kRegions{Region::Origin, Region::E1,      Region::EAxisY2,
                                                    Region::EAxisY3, Region::E3, Region::EMinus};

    Region classify(std::int64_t y2, std::int64_t y3);
    std::string_view region_name(Region r);

    struct RegionDrift
    {
        Region region = Region::Origin;
        std::size_t count = 0;
        double max_full = -std::numeric_limits<double>::infinity();
        double max_free = -std::numeric_limits<double>::infinity();
        double max_rollback = -std::numeric_limits<double>::infinity();
        std::array<std::int64_t, 2> worst_state{};
    };

    struct DriftReport
    {
        Contour contour;
        double c0 = 0.0;
        double c1 = 0.0;
        std::int64_t box_half_width = 0;
        /// Indexed like kRegions; counts cover the annulus c0 < phi <= c1.
        std::array<RegionDrift, 6> regions;
        std::size_t annulus_size = 0;
        double worst_drift = -std::numeric_limits<double>::infinity();
        std::array<std::int64_t, 2> worst_state{};
        std::size_t finite_set_size = 0;
        /// sup of E[phi(Y(n+1)) | Y(n) = y] over phi(y) <= c0.
        double finite_set_sup = 0.0;
        double epsilon = 0.0;
        /// Annulus points in E_minus with a rollback target of larger phi.
        std::size_t rollback_increases = 0;
        bool verdict = false;
    };

    /// Exact drift of phi on every integer point of the annulus c0 < phi <= c1.
    /// Throws Error{BadRadii} unless c1 > c0 > 0, Error{AssumptionViolated}
    /// unless lambda_1 < lambda_2 and lambda_1 < lambda_3.
    DriftReport drift_report(const CascadeParams &params, const Contour &contour, double c0, double c1, unsigned threads = 0);
} // namespace cascade
