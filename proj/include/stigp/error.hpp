#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stigp {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller supplied an argument that violates a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Malformed input file (CSV, forecast JSON).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A kernel matrix stayed non positive definite through the whole jitter ladder.
class IllConditionedError : public Error {
public:
    using Error::Error;
};

// An ill-conditioned failure while fitting one block of the forecaster.
class BlockFitError : public IllConditionedError {
public:
    BlockFitError(const std::string& what, std::size_t block)
        : IllConditionedError("block " + std::to_string(block) + ": " + what), block_(block) {}

    std::size_t block() const noexcept { return block_; }

private:
    std::size_t block_;
};

// ODE integration produced a non-finite state.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, long step)
        : Error(what + " at integration step " + std::to_string(step)), step_(step) {}

    long step() const noexcept { return step_; }

private:
    long step_;
};

}  // namespace stigp
