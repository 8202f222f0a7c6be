#pragma once

#include <stdexcept>
#include <string>

namespace henon {

/// Parameters or arguments outside the domain of a formula.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Evaluation of a vector field at a singular point (e.g. xi = 0 in the profile ODE).
class SingularityError : public std::domain_error {
public:
    explicit SingularityError(const std::string& what) : std::domain_error(what) {}
};

/// Bisection bracket whose endpoints carry the same label.
class BracketInvalid : public std::invalid_argument {
public:
    explicit BracketInvalid(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace henon
