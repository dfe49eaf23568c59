#include "cascade/model.hpp"

#include "cascade/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cascade
{
    std::string_view to_string(ErrorCode code) noexcept
    {
        switch (code)
        {
        case ErrorCode::NonPositiveLambda: return "NonPositiveLambda";
        case ErrorCode::NegativeBeta: return "NegativeBeta";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::DegenerateLevels: return "DegenerateLevels";
        case ErrorCode::EmptyRollback: return "EmptyRollback";
        case ErrorCode::Underflow: return "Underflow";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::NonPositiveHorizon: return "NonPositiveHorizon";
        case ErrorCode::BadQuadrant: return "BadQuadrant";
        case ErrorCode::AssumptionViolated: return "AssumptionViolated";
        case ErrorCode::UndefinedAtCorner: return "UndefinedAtCorner";
        case ErrorCode::BadRadii: return "BadRadii";
        case ErrorCode::ParamMismatch: return "ParamMismatch";
        case ErrorCode::ConfigParse: return "ConfigParse";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        }
        return "Unknown";
    }

    CascadeParams validate_params(std::size_t n, std::vector<double> lambdas, std::vector<double> betas)
    {
        if (n == 0 || lambdas.size() != n || betas.size() + 1 != n)
        {
            std::ostringstream msg;
            msg << "expected " << n << " lambdas and " << (n == 0 ? 0 : n - 1) << " betas, got "
                << lambdas.size() << " and " << betas.size();
            throw Error(ErrorCode::LengthMismatch, msg.str());
        }
        for (std::size_t q = 0; q < n; ++q)
        {
            if (!std::isfinite(lambdas[q]) || lambdas[q] <= 0.0)
            {
                throw Error(ErrorCode::NonPositiveLambda, "lambda[" + std::to_string(q) + "] must be finite and > 0");
            }
        }
        for (std::size_t q = 0; q + 1 < n; ++q)
        {
            if (!std::isfinite(betas[q]) || betas[q] < 0.0)
            {
                throw Error(ErrorCode::NegativeBeta, "beta[" + std::to_string(q) + "] must be finite and >= 0");
            }
        }

        CascadeParams p;
        p.n = n;
        p.lambdas = std::move(lambdas);
        p.betas = std::move(betas);
        p.z = std::accumulate(p.lambdas.begin(), p.lambdas.end(), 0.0) +
              std::accumulate(p.betas.begin(), p.betas.end(), 0.0);
        p.b.assign(n, 0.0);
        for (std::size_t q = 0; q + 1 < n; ++q)
        {
            p.b[q] = p.betas[q] / (p.lambdas[q] + p.betas[q]);
        }
        return p;
    }

    CascadeParams rescaled(const CascadeParams &params, double c)
    {
        auto lambdas = params.lambdas;
        auto betas = params.betas;
        for (auto &l : lambdas)
        {
            l *= c;
        }
        for (auto &b : betas)
        {
            b *= c;
        }
        return validate_params(params.n, std::move(lambdas), std::move(betas));
    }

    CascadeParams normalized(const CascadeParams &params)
    {
        return rescaled(params, 1.0 / params.z);
    }

    CascadeParams prefix(const CascadeParams &params, std::size_t n1)
    {
        if (n1 == 0 || n1 > params.n)
        {
            throw Error(ErrorCode::IndexOutOfRange, "prefix length must be in [1, n]");
        }
        return validate_params(n1,
                               std::vector<double>(params.lambdas.begin(), params.lambdas.begin() + static_cast<std::ptrdiff_t>(n1)),
                               std::vector<double>(params.betas.begin(), params.betas.begin() + static_cast<std::ptrdiff_t>(n1 - 1)));
    }

    std::vector<double> level_function(const CascadeParams &params)
    {
        std::vector<double> level(params.n);
        double running = params.lambdas.front();
        for (std::size_t m = 0; m < params.n; ++m)
        {
            running = std::min(running, params.lambdas[m]);
            level[m] = running;
        }
        return level;
    }

    GroupPartition decompose_groups(const CascadeParams &params)
    {
        auto sorted = params.lambdas;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        {
            throw Error(ErrorCode::DegenerateLevels, "group prediction requires pairwise distinct lambdas");
        }

        GroupPartition out;
        out.predicted_speeds = level_function(params);
        for (std::size_t j = 0; j < params.n; ++j)
        {
            // A new group starts exactly where the prefix minimum drops.
            if (j == 0 || out.predicted_speeds[j] < out.predicted_speeds[j - 1])
            {
                out.boundaries.push_back(j);
                out.groups.emplace_back();
            }
            out.groups.back().push_back(j);
        }
        out.boundaries.push_back(params.n);
        return out;
    }
} // namespace cascade
