#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace chromatwin {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto its exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message, std::vector<std::string> fields = {})
        : Error(message), fields_(std::move(fields)) {}

    const std::vector<std::string>& fields() const { return fields_; }

private:
    std::vector<std::string> fields_;
};

class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

class FactorizationError : public Error {
public:
    using Error::Error;
};

class StorageError : public Error {
public:
    using Error::Error;
};

class VisionRejection : public Error {
public:
    VisionRejection(const std::string& message, int markers_found)
        : Error(message), markers_found_(markers_found) {}

    int markers_found() const { return markers_found_; }

private:
    int markers_found_;
};

} // namespace chromatwin
