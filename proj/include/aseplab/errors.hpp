#pragma once

#include <stdexcept>
#include <string>

namespace aseplab
{
    /// Bad parameters, malformed input or a precondition the caller controls.
    class ValidationError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    /// A coupling or height invariant failed. Never recoverable: it means a bug.
    class InvariantViolation : public std::logic_error
    {
    public:
        using std::logic_error::logic_error;
    };

    /// A finite truncation (labels, window, priority chain) could not hold the
    /// objects a construction needs.
    class TruncationError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    inline void require(bool ok, const std::string &what)
    {
        if (!ok)
        {
            throw ValidationError(what);
        }
    }

    inline void ensure(bool ok, const std::string &what)
    {
        if (!ok)
        {
            throw InvariantViolation(what);
        }
    }
} // namespace aseplab
