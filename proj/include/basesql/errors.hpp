#pragma once

#include <stdexcept>
#include <string>

namespace basesql {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// catalog
class FileNotFound : public Error {
public:
    explicit FileNotFound(const std::string& path) : Error("file not found: " + path) {}
};

class NotADatabase : public Error {
public:
    explicit NotADatabase(const std::string& path) : Error("not a SQLite database: " + path) {}
};

class EmptyDatabase : public Error {
public:
    explicit EmptyDatabase(const std::string& path) : Error("database has no user tables: " + path) {}
};

class IntrospectionFailed : public Error {
public:
    IntrospectionFailed(const std::string& object, const std::string& detail)
        : Error("introspection failed on " + object + ": " + detail) {}
};

// schema-repr
class UnknownTable : public Error {
public:
    explicit UnknownTable(const std::string& name) : Error("unknown table: " + name) {}
};

// llm-gateway
class EndpointUnreachable : public Error {
public:
    explicit EndpointUnreachable(const std::string& detail) : Error("endpoint unreachable: " + detail) {}
};

class HttpStatusError : public Error {
public:
    HttpStatusError(int status, const std::string& body)
        : Error("http status " + std::to_string(status) + ": " + body), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

class ReplayMiss : public Error {
public:
    explicit ReplayMiss(const std::string& key) : Error("replay miss for key " + key) {}
};

// sql-analysis
class NoSqlFound : public Error {
public:
    NoSqlFound() : Error("no SQL statement found in model output") {}
};

// executor
class InvalidDbPath : public Error {
public:
    explicit InvalidDbPath(const std::string& path) : Error("cannot open database: " + path) {}
};

class TruncatedComparison : public Error {
public:
    TruncatedComparison() : Error("cannot compare truncated execution results") {}
};

// bench
class SchemaMismatch : public Error {
public:
    SchemaMismatch(const std::string& field, std::size_t row)
        : Error("benchmark row " + std::to_string(row) + " missing field '" + field + "'") {}
};

class LengthMismatch : public Error {
public:
    LengthMismatch() : Error("prediction and gold lists differ in length") {}
};

// config / CLI
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace basesql
