#pragma once

#include <stdexcept>
#include <string>

namespace ravu {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input document or plan text. `line` is 1-based, 0 when the
// source has no line structure.
class ParseError : public Error {
public:
    ParseError(std::string field, std::string reason, int line = 0)
        : Error(format(field, reason, line)),
          field_(std::move(field)),
          reason_(std::move(reason)),
          line_(line) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& reason() const noexcept { return reason_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& field, const std::string& reason, int line) {
        std::string out = "parse error";
        if (line > 0) out += " at line " + std::to_string(line);
        if (!field.empty()) out += " [" + field + "]";
        if (!reason.empty()) out += ": " + reason;
        return out;
    }

    std::string field_;
    std::string reason_;
    int line_;
};

class NotFound : public Error {
public:
    using Error::Error;
};

class EmptyIndex : public Error {
public:
    EmptyIndex() : Error("embedding index is empty") {}
    using Error::Error;
};

// Backend did not answer within its deadline (or was unreachable).
class Timeout : public Error {
public:
    using Error::Error;
};

// Provider refused the request on content grounds.
class BlockedContent : public Error {
public:
    using Error::Error;
};

// Backend answered, but the caller could not use the answer.
class MalformedResponse : public Error {
public:
    using Error::Error;
};

}  // namespace ravu
