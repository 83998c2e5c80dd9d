#pragma once

#include <stdexcept>
#include <string>

namespace dlkd {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Tensor/kernel shapes do not conform.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A scalar argument is outside its valid range, or an API is misused.
class ParamError : public Error {
public:
    using Error::Error;
};

/// Input data violates a documented precondition (out-of-range values, bad label).
class InputError : public Error {
public:
    using Error::Error;
};

/// A configuration (model, dataset, experiment, config file) is invalid.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A binary or text file does not follow its format. Carries the byte offset
/// at which decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t byte_offset)
        : Error(what + " (at byte offset " + std::to_string(byte_offset) + ")"),
          offset_(byte_offset) {}
    std::size_t byte_offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Two artifacts that must agree (e.g. logit store vs. dataset) do not.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Training aborted (non-finite loss). Reports epoch and step.
class TrainError : public Error {
public:
    TrainError(const std::string& what, std::size_t epoch, std::size_t step)
        : Error(what + " (epoch " + std::to_string(epoch) + ", step " +
                std::to_string(step) + ")"),
          epoch_(epoch),
          step_(step) {}
    std::size_t epoch() const { return epoch_; }
    std::size_t step() const { return step_; }

private:
    std::size_t epoch_;
    std::size_t step_;
};

/// An experiment arm failed. Names the arm and seed.
class ExperimentError : public Error {
public:
    ExperimentError(const std::string& what, const std::string& arm, std::uint64_t seed)
        : Error(what + " (arm '" + arm + "', seed " + std::to_string(seed) + ")"),
          arm_(arm),
          seed_(seed) {}
    const std::string& arm() const { return arm_; }
    std::uint64_t seed() const { return seed_; }

private:
    std::string arm_;
    std::uint64_t seed_;
};

} // namespace dlkd
