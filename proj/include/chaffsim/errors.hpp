#ifndef CHAFFSIM_ERRORS_HPP
#define CHAFFSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace chaffsim {

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Chain is not ergodic (reducible or periodic), or stationarity could not be reached.
struct ErgodicityError : std::runtime_error {
    explicit ErgodicityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Instance too large for an exhaustive/exact routine.
struct SizeError : std::runtime_error {
    explicit SizeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonMixingError : std::runtime_error {
    explicit NonMixingError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UndefinedValueError : std::runtime_error {
    explicit UndefinedValueError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnsupportedStrategyError : std::runtime_error {
    explicit UnsupportedStrategyError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace chaffsim

#endif
