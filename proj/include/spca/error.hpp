#pragma once

#include <stdexcept>
#include <string>

namespace spca {

/// Invalid argument: bad sparsity level, negative SNR, dimension mismatch.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A valid parameter combination that the routine does not support
/// (noiseless scalar channel, degenerate Gaussian channel).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Iteration failed to converge or produced a non-finite value.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double last_residual = 0.0, long iteration = -1)
        : std::runtime_error(what), last_residual_(last_residual), iteration_(iteration) {}

    double last_residual() const noexcept { return last_residual_; }
    long iteration() const noexcept { return iteration_; }

private:
    double last_residual_;
    long iteration_;
};

namespace detail {

inline void require(bool cond, const std::string& msg)
{
    if (!cond) throw ParameterError(msg);
}

inline void require_sparsity(double epsilon)
{
    // negated form also rejects NaN
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ParameterError("sparsity epsilon must lie in (0,1), got " + std::to_string(epsilon));
}

} // namespace detail
} // namespace spca
