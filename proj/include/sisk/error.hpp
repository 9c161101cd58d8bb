#pragma once

#include <stdexcept>
#include <string>

namespace sisk {

// Bad arguments or malformed input files.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ParseError : public InputError {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : InputError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A computation produced non-finite values or hit a singular system.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace sisk
