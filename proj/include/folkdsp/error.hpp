#pragma once

#include <stdexcept>
#include <string>

namespace folkdsp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed RIFF/WAVE container.
class DecodeError : public Error {
public:
    explicit DecodeError(const std::string& reason) : Error("decode error: " + reason) {}
};

/// Well-formed container with a codec or channel layout we do not read.
class UnsupportedFormat : public Error {
public:
    explicit UnsupportedFormat(const std::string& what) : Error("unsupported format: " + what) {}
};

class InputTooShort : public Error {
public:
    explicit InputTooShort(const std::string& what) : Error("input too short: " + what) {}
};

/// File layout (feature table header, model schema or version) is not the expected one.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error("schema error: " + what) {}
};

/// Values that violate a data contract (non-finite numbers, unknown labels, ...).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error("data error: " + what) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error("shape error: " + what) {}
};

class SplitError : public Error {
public:
    explicit SplitError(const std::string& what) : Error("split error: " + what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config error: " + what) {}
};

class InvalidClustering : public Error {
public:
    explicit InvalidClustering(const std::string& what) : Error("invalid clustering: " + what) {}
};

class TrainingDiverged : public Error {
public:
    explicit TrainingDiverged(int epoch)
        : Error("training diverged: non-finite loss at epoch " + std::to_string(epoch)), epoch_(epoch) {}

    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

}  // namespace folkdsp
