#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cascade
{
    /// Validated rates of a cascade of processors 0..n-1, where link q carries
    /// messages from processor q to processor q+1.
    ///
    /// z is the total event rate of the embedded chain and b[q] the probability
    /// that processor q emits at least one message to q+1 while it sits at a
    /// given local-time value: b[q] = beta[q] / (lambda[q] + beta[q]). The last
    /// processor sends nothing, so b[n-1] = 0.
    struct CascadeParams
    {
        std::size_t n = 0;
        std::vector<double> lambdas;
        std::vector<double> betas;
        double z = 0.0;
        std::vector<double> b;

        double lambda(std::size_t q) const { return lambdas[q]; }
        double beta(std::size_t q) const { return betas[q]; }
    };

    /// Throws Error{NonPositiveLambda | NegativeBeta | LengthMismatch}.
    CascadeParams validate_params(std::size_t n, std::vector<double> lambdas, std::vector<double> betas);

    /// Same rates multiplied by c > 0.
    CascadeParams rescaled(const CascadeParams &params, double c);

    /// Time rescale that sets the total rate to 1.
    CascadeParams normalized(const CascadeParams &params);

    /// First n1 processors of the cascade (itself a cascade model).
    CascadeParams prefix(const CascadeParams &params, std::size_t n1);

    /// Prefix minimum of the lambdas.
    std::vector<double> level_function(const CascadeParams &params);

    struct GroupPartition
    {
        /// 0-based group starts followed by n as a sentinel.
        std::vector<std::size_t> boundaries;
        /// Processor indices of each group.
        std::vector<std::vector<std::size_t>> groups;
        std::vector<double> predicted_speeds;
    };

    /// Maximal contiguous blocks of processors sharing one level-function
    /// value. Throws Error{DegenerateLevels} when two lambdas coincide.
    GroupPartition decompose_groups(const CascadeParams &params);
} // namespace cascade
