#pragma once

#include <stdexcept>
#include <string>

namespace granbath {

/// A precondition of a public operation was not met by the caller.
class ContractViolation : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure (quadrature, root bracketing) did not reach its
/// requested accuracy. Carries the error it did achieve.
class NumericFailure : public std::runtime_error
{
public:
    NumericFailure(const std::string& what, double achieved_error)
        : std::runtime_error(what), achieved_error_(achieved_error)
    {
    }

    double achieved_error() const noexcept { return achieved_error_; }

private:
    double achieved_error_;
};

inline void require(bool condition, const char* message)
{
    if (!condition) {
        throw ContractViolation(message);
    }
}

}  // namespace granbath
