/*
 * Exception types shared by every kmslab component.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace kmslab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Observable text that does not match the grammar. Line/column are 1-based.
struct ParseError : Error {
    ParseError(const std::string& what, int line_, int column_)
        : Error(what + " at line " + std::to_string(line_) + ", column " + std::to_string(column_)),
          message(what), line(line_), column(column_) {}
    std::string message;
    int line;
    int column;
};

// Evaluation produced a non-finite value; `node` is the printed sub-expression responsible.
struct EvaluationError : Error {
    EvaluationError(const std::string& what, std::string node_)
        : Error(what + ": " + node_), node(std::move(node_)) {}
    std::string node;
};

// A site needed by an observable or a potential term is neither in the window nor in the collar.
struct MissingSiteError : Error {
    using Error::Error;
};

// Invalid run/potential configuration. `field` carries the dotted path of the offending key.
struct ConfigError : Error {
    explicit ConfigError(const std::string& what, std::string field_ = {})
        : Error(field_.empty() ? what : field_ + ": " + what), field(std::move(field_)) {}
    std::string field;
};

// Quadrature requested on a region larger than the engine allows.
struct CostGuardError : Error {
    using Error::Error;
};

// Metropolis chain hit a non-finite energy difference.
struct SamplerError : Error {
    using Error::Error;
};

} // namespace kmslab
