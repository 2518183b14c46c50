#pragma once

#include <stdexcept>
#include <string>

namespace ulra {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Thrown when an iterative solver hits its cap; carries the best estimate so far.
class IterationLimitError : public Error {
public:
    IterationLimitError(const std::string& msg, double best)
        : Error(msg), best_estimate_(best) {}
    double best_estimate() const { return best_estimate_; }

private:
    double best_estimate_;
};

class CapacityError : public Error {
public:
    explicit CapacityError(const std::string& msg) : Error(msg) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

class DegenerateInputError : public Error {
public:
    explicit DegenerateInputError(const std::string& msg) : Error(msg) {}
};

}  // namespace ulra
