#include "cascade/rng.hpp"

#include <cmath>
#include <limits>

namespace cascade
{
    std::uint64_t splitmix64(std::uint64_t x) noexcept
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    Rng Rng::for_stream(std::uint64_t seed, std::uint64_t stream)
    {
        return Rng(splitmix64(seed ^ splitmix64(stream + 1)));
    }

    double Rng::exponential(double rate)
    {
        return -std::log(uniform_open_zero()) / rate;
    }

    std::int64_t Rng::geometric_failures(double p)
    {
        if (p >= 1.0)
        {
            return 0;
        }
        if (p <= 0.0)
        {
            return std::numeric_limits<std::int64_t>::max();
        }
        const double k = std::floor(std::log(uniform_open_zero()) / std::log1p(-p));
        if (k >= static_cast<double>(std::numeric_limits<std::int64_t>::max()))
        {
            return std::numeric_limits<std::int64_t>::max();
        }
        return static_cast<std::int64_t>(k);
    }

    std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi)
    {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0)
        {
            return static_cast<std::int64_t>(next_u64());
        }
        // Rejection sampling to avoid modulo bias.
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
        std::uint64_t r = next_u64();
        while (r >= limit)
        {
            r = next_u64();
        }
        return lo + static_cast<std::int64_t>(r % span);
    }
} // namespace cascade
