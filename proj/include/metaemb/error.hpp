// Error type shared by all modules. Parse errors carry line numbers,
// pipeline errors carry the failing stage name.
#pragma once

#include <stdexcept>
#include <string>

namespace metaemb {

class Error : public std::runtime_error {
public:
    explicit Error(std::string message)
        : std::runtime_error(std::move(message)) {}

    Error(const std::string& message, std::string stage)
        : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// Parse failure in an external text format; references the 1-based line.
class ParseError : public Error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace metaemb
