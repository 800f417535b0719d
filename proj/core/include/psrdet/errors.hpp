#pragma once

#include <stdexcept>
#include <string>

namespace psrdet {

// Bad flags, malformed config keys, out-of-range arguments. CLI exit code 1.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing/corrupt files, inconsistent corpora. CLI exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values during optimization. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Scenario draw that cannot produce a usable sequence (e.g. too few visible
// satellites). Corpus generation catches this and resamples with a new seed.
class DegenerateScenario : public DataError {
public:
    explicit DegenerateScenario(const std::string& msg) : DataError(msg) {}
};

}  // namespace psrdet
