#pragma once

#include <stdexcept>
#include <string>

namespace synergy {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& message, int line, int column)
        : Error("syntax error at " + std::to_string(line) + ":" + std::to_string(column) + ": " +
                message),
          message_(message),
          line_(line),
          column_(column) {}

    const std::string& message() const { return message_; }
    int line() const { return line_; }
    int column() const { return column_; }

private:
    std::string message_;
    int line_;
    int column_;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class CycleError : public Error {
public:
    using Error::Error;
};

class AmbiguityError : public Error {
public:
    using Error::Error;
};

class UnsupportedQuery : public Error {
public:
    using Error::Error;
};

class PlanError : public Error {
public:
    using Error::Error;
};

class StorageError : public Error {
public:
    using Error::Error;
};

class UnknownTable : public StorageError {
public:
    explicit UnknownTable(const std::string& table) : StorageError("unknown table: " + table) {}
};

class TypeError : public StorageError {
public:
    using StorageError::StorageError;
};

class KeyError : public StorageError {
public:
    using StorageError::StorageError;
};

class OrphanError : public Error {
public:
    using Error::Error;
};

class UnsupportedUpdate : public Error {
public:
    using Error::Error;
};

class InvalidStatement : public Error {
public:
    using Error::Error;
};

class LockTimeout : public Error {
public:
    using Error::Error;
};

class WalCorruption : public Error {
public:
    using Error::Error;
};

class DirtyReadTimeout : public Error {
public:
    using Error::Error;
};

}  // namespace synergy
