#pragma once

#include <exception>
#include <stdexcept>
#include <string>

namespace poregrad {

/// Invalid argument or configuration value. Maps to CLI exit code 2.
class ParameterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data cannot be processed (constant image, unfittable profile,
/// malformed file). Maps to CLI exit code 3.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NormalizationError : public DataError {
public:
    using DataError::DataError;
};

class ProfileError : public DataError {
public:
    using DataError::DataError;
};

class FitError : public DataError {
public:
    using DataError::DataError;
};

class GenerationError : public DataError {
public:
    using DataError::DataError;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

/// CLI exit code for an exception: 2 parameter, 3 data, 4 anything else.
inline int exit_code_for(const std::exception& e) noexcept
{
    if (dynamic_cast<const ParameterError*>(&e))
        return 2;
    if (dynamic_cast<const DataError*>(&e))
        return 3;
    return 4;
}

}  // namespace poregrad
