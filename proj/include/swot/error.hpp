#pragma once

#include <stdexcept>
#include <string>

namespace swot {

// Error raised by the N-Triples, rule, query, and manifest parsers.
// Line and column are 1-based and refer to the input text handed to
// the parser, not to any enclosing file.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, int line, int col)
        : std::runtime_error("line " + std::to_string(line) + ", col " +
                             std::to_string(col) + ": " + message),
          line_(line),
          col_(col) {}

    int line() const noexcept { return line_; }
    int col() const noexcept { return col_; }

private:
    int line_;
    int col_;
};

// Runtime failure while evaluating a rule builtin (non-numeric literal,
// unbound argument). The message names the rule and atom.
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Wraps an error from one pipeline stage so callers can always tell
// which stage failed. what() reads "stage: detail".
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& detail)
        : std::runtime_error(stage + ": " + detail), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace swot
