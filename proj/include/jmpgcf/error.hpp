#pragma once

#include <stdexcept>
#include <string>

namespace jmpgcf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (dataset files, config files).
class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

/// Dataset content violating an invariant (duplicate users, train/test overlap, ...).
class DatasetError : public Error {
public:
    using Error::Error;
};

/// Invalid hyperparameters or out-of-range indices.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Mismatched shapes between matrices, tables or datasets.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Corrupt or incompatible checkpoint / persisted file.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Non-finite values encountered during optimization.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace jmpgcf
