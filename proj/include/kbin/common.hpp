#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace kbin {

// Malformed or inconsistent input data (bad FASTA record, unknown read id,
// file format violation). Maps to exit code 2 in the CLI.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Data error tied to a specific line of a text stream.
class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError(what + " at line " + std::to_string(line)), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Non-finite loss or divergence during training. Maps to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kbin
