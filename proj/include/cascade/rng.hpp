#pragma once

#include <cstdint>
#include <random>

namespace cascade
{
    /// Seedable generator used by every stochastic component.
    ///
    /// The engine is std::mt19937_64, whose output sequence is fixed by the
    /// standard. The conversions to uniform and exponential variates are done
    /// here rather than through <random> distributions, whose algorithms are
    /// implementation-defined, so a (seed, stream) pair produces the same
    /// numbers on every platform.
    ///
    /// Stream split rule: stream k of master seed s is seeded with
    /// splitmix64(s ^ splitmix64(k + 1)).
    class Rng
    {
    public:
        using result_type = std::uint64_t;

        explicit Rng(std::uint64_t seed) : m_engine(seed) {}

        static Rng for_stream(std::uint64_t seed, std::uint64_t stream);

        std::uint64_t next_u64() { return m_engine(); }

        /// Uniform on [0, 1) with 53 random bits.
        double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }

        /// Uniform on (0, 1].
        double uniform_open_zero() { return 1.0 - uniform(); }

        /// Exponential with the given rate; rate must be positive.
        double exponential(double rate);

        /// Number of failures before the first success of a Bernoulli(p) sequence.
        /// p == 0 yields the maximum representable count.
        std::int64_t geometric_failures(double p);

        /// Uniform integer in [lo, hi].
        std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

        // UniformRandomBitGenerator interface.
        static constexpr result_type min() { return std::mt19937_64::min(); }
        static constexpr result_type max() { return std::mt19937_64::max(); }
        result_type operator()() { return m_engine(); }

    private:
        std::mt19937_64 m_engine;
    };

    std::uint64_t splitmix64(std::uint64_t x) noexcept;
} // namespace cascade
