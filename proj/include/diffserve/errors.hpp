#pragma once

#include <stdexcept>
#include <string>

namespace diffserve {

// Malformed input file. `line` is 1-based; 0 means "not line-addressable".
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, int line, const std::string& what_arg)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what_arg),
          file_(file), line_(line) {}

    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

// A structural precondition on loaded data does not hold (profile tables,
// curves, cascade consistency). The message names the violated condition.
class InvariantError : public std::runtime_error {
public:
    explicit InvariantError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

} // namespace diffserve
