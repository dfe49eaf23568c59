#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cascade
{
    enum class ErrorCode
    {
        NonPositiveLambda,
        NegativeBeta,
        LengthMismatch,
        DegenerateLevels,
        EmptyRollback,
        Underflow,
        IndexOutOfRange,
        NonPositiveHorizon,
        BadQuadrant,
        AssumptionViolated,
        UndefinedAtCorner,
        BadRadii,
        ParamMismatch,
        ConfigParse,
        InvalidArgument,
    };

    std::string_view to_string(ErrorCode code) noexcept;

    /// Every failure raised by the library carries one of the codes above so
    /// callers (the CLI in particular) can map it to a diagnostic and exit code.
    class Error : public std::runtime_error
    {
    public:
        Error(ErrorCode code, const std::string &what)
            : std::runtime_error(std::string(to_string(code)) + ": " + what), m_code(code)
        {
        }

        ErrorCode code() const noexcept { return m_code; }

    private:
        ErrorCode m_code;
    };
} // namespace cascade
