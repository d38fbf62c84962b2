#pragma once

#include <stdexcept>
#include <string>

namespace dcrm {

/// A parameter fell outside the domain of a distribution or recursion.
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A model invariant (e.g. a filtering shape parameter bound) was violated.
class invariant_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The dependence parameter eta exceeds the bound under which the
/// count-weighted exponential moment exists. Carries the bound.
class existence_error : public std::runtime_error {
public:
    existence_error(double eta, double bound)
        : std::runtime_error("eta=" + std::to_string(eta) +
                             " violates existence bound eta < " + std::to_string(bound)),
          eta_(eta), bound_(bound) {}

    double eta() const noexcept { return eta_; }
    double bound() const noexcept { return bound_; }

private:
    double eta_;
    double bound_;
};

/// Malformed or invariant-violating input data. Carries the offending line
/// number (0 when not tied to a specific line).
class data_error : public std::runtime_error {
public:
    data_error(std::string msg, long line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg
                                      : std::move(msg)),
          line_(line) {}

    long line() const noexcept { return line_; }

private:
    long line_;
};

/// An iterative procedure (IRLS, simplex search, grid refinement) failed to
/// converge within its budget.
class convergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The data cannot identify the requested parameters (e.g. a severity fit on
/// a portfolio with no claims).
class estimation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dcrm
