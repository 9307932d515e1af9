#pragma once

#include <stdexcept>
#include <string>

namespace lureobs {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularMatrixError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// thrown when an integrated state stops being finite
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& what, std::size_t step, double time)
        : std::runtime_error(what), step(step), time(time) {}
    std::size_t step;
    double time;
};

struct ScenarioParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace lureobs
