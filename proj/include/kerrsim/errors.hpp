#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kerrsim {

// Violated precondition or out-of-domain argument.
class invalid_input : public std::invalid_argument {
public:
    explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

// A projective measurement outcome with (numerically) zero posterior norm.
class impossible_outcome : public std::runtime_error {
public:
    explicit impossible_outcome(const std::string& what) : std::runtime_error(what) {}
};

// A Monte Carlo trial threw; carries the failing trial index.
class trial_failure : public std::runtime_error {
public:
    trial_failure(std::size_t index, const std::string& what)
        : std::runtime_error("trial " + std::to_string(index) + ": " + what), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

} // namespace kerrsim
