#pragma once

#include <stdexcept>
#include <string>

namespace autoform {

// Base class for all harness errors. Every failure mode that callers are
// expected to handle gets its own type so tests and the CLI can catch them
// precisely.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- backend ---
class MissingCredential : public Error { public: using Error::Error; };
class TransportExhausted : public Error { public: using Error::Error; };
class ScriptExhausted : public Error { public: using Error::Error; };
class ScriptMismatch : public Error { public: using Error::Error; };
class MalformedProviderReply : public Error { public: using Error::Error; };
class UnknownTokenizer : public Error { public: using Error::Error; };

// --- datasets ---
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line) : Error(msg), line_(line) {}
    std::size_t line() const { return line_; }
private:
    std::size_t line_ = 0;
};
class SchemaMismatch : public Error {
public:
    SchemaMismatch(const std::string& msg, std::string field, std::size_t line = 0)
        : Error(msg), field_(std::move(field)), line_(line) {}
    const std::string& field() const { return field_; }
    std::size_t line() const { return line_; }
private:
    std::string field_;
    std::size_t line_ = 0;
};
class NoSegments : public Error { public: using Error::Error; };
class InsufficientSupport : public Error { public: using Error::Error; };
class OverBudget : public Error { public: using Error::Error; };

// --- prompting ---
class UnknownTemplate : public Error { public: using Error::Error; };
class UnboundPlaceholder : public Error {
public:
    UnboundPlaceholder(const std::string& msg, std::string placeholder)
        : Error(msg), placeholder_(std::move(placeholder)) {}
    const std::string& placeholder() const { return placeholder_; }
private:
    std::string placeholder_;
};
class MissingFormatNote : public Error { public: using Error::Error; };
class StrategyMismatch : public Error { public: using Error::Error; };
class WrongArity : public Error { public: using Error::Error; };

// --- reasoning ---
class EmptySelectorReply : public Error { public: using Error::Error; };
class MissingGold : public Error { public: using Error::Error; };
class IncompleteRunMatrix : public Error { public: using Error::Error; };

// --- dialogue ---
class ShareLeak : public Error { public: using Error::Error; };

// --- acl (serialization side; parsing reports positioned errors by value) ---
class InvalidAtom : public Error { public: using Error::Error; };
class UnrepresentableValue : public Error { public: using Error::Error; };

// --- metrics ---
class ZeroBaseline : public Error { public: using Error::Error; };
class EmptyInput : public Error { public: using Error::Error; };

// --- cli ---
class ConfigInvalid : public Error {
public:
    ConfigInvalid(const std::string& msg, std::string key = "")
        : Error(msg), key_(std::move(key)) {}
    const std::string& key() const { return key_; }
private:
    std::string key_;
};
class MissingBaseline : public Error { public: using Error::Error; };

} // namespace autoform
