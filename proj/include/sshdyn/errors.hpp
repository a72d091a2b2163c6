#ifndef SSHDYN_ERRORS_HPP
#define SSHDYN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sshdyn {

/// Invalid parameters, mismatched sizes or malformed configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative procedure (SCF, eigen-analysis) failed to reach its target.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// A trajectory had to be aborted (step-size underflow, non-finite state).
class PropagationError : public std::runtime_error {
public:
    PropagationError(const std::string& what, double time)
        : std::runtime_error(what), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

} // namespace sshdyn

#endif // SSHDYN_ERRORS_HPP
