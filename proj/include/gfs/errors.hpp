#pragma once

#include <stdexcept>
#include <string>

namespace gfs {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GenerationFailed : public Error {
public:
    using Error::Error;
};

// Carries the 1-based line number of the offending edge-list line.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

class SelfLoop : public Error {
public:
    using Error::Error;
};

class DuplicateEdge : public Error {
public:
    using Error::Error;
};

class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

class InvalidShift : public Error {
public:
    using Error::Error;
};

class NonPositiveSchur : public Error {
public:
    using Error::Error;
};

class DegenerateUpdate : public Error {
public:
    using Error::Error;
};

class InfeasibleAvailability : public Error {
public:
    using Error::Error;
};

class RankDeficient : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace gfs
