#pragma once

#include <stdexcept>
#include <string>

namespace featpca {

// Error categories map one-to-one onto CLI exit codes:
// validation -> 2, io -> 3, numerical divergence -> 4.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace featpca
