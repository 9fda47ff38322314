#pragma once

#include <stdexcept>
#include <string>

namespace flowgen {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Python source could not be tokenized or parsed.
class ParseError : public Error {
public:
    ParseError(int line, int column, const std::string& msg)
        : Error("parse error at line " + std::to_string(line) + ", column " +
                std::to_string(column) + ": " + msg),
          line(line),
          column(column),
          detail(msg) {}

    int line;
    int column;
    std::string detail;
};

// Normalization pipeline failure (strip/style/encode).
class NormalizationError : public Error {
public:
    explicit NormalizationError(const std::string& msg)
        : Error("normalization error: " + msg) {}
};

// Strict-mode flow text that does not conform to the flow grammar.
class FlowFormatError : public Error {
public:
    explicit FlowFormatError(const std::string& msg)
        : Error("flow format error: " + msg) {}

    FlowFormatError(const std::string& msg, const std::string& token)
        : Error("flow format error: " + msg + " (offending token: '" + token + "')"),
          offending_token(token) {}

    std::string offending_token;
};

// Metric evaluation failure (golden reference unusable, empty corpus, ...).
class MetricError : public Error {
public:
    explicit MetricError(const std::string& msg) : Error("metric error: " + msg) {}
};

// File system / stream failure.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io error: " + msg) {}
};

// Bad configuration (unknown format tag, invalid flag combination, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

}  // namespace flowgen
