#pragma once

#include <stdexcept>
#include <string>

namespace acrobin {

/// Input outside the mathematical domain of an operation (angle out of range,
/// point outside a grid, violated precondition). Maps to CLI exit code 1.
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Potential that does not satisfy the double-well requirements.
class invalid_potential : public domain_error {
public:
    using domain_error::domain_error;
};

/// Evaluator produced a non-finite value.
class evaluation_error : public domain_error {
public:
    evaluation_error(const std::string& what, double at)
        : domain_error(what + " (at u = " + std::to_string(at) + ")"), point(at) {}
    double point;
};

/// Iterative method failed (Newton divergence, eigen-iteration breakdown,
/// root bracketing failure). Maps to CLI exit code 2.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newton iteration did not converge; carries the last residual.
class convergence_error : public numerical_error {
public:
    convergence_error(const std::string& what, double last_residual)
        : numerical_error(what + " (last residual " + std::to_string(last_residual) + ")"),
          residual(last_residual) {}
    double residual;
};

/// Polyline topology problems (self-intersection, too few nodes).
class topology_error : public domain_error {
public:
    using domain_error::domain_error;
};

}  // namespace acrobin
