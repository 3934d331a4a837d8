#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dds {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Rejected inputs: malformed prior specs, bad dimensions, out-of-range parameters.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ChannelOverflow : public Error {
public:
    using Error::Error;
};

class DegreeTooLarge : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DegenerateChannel : public Error {
public:
    using Error::Error;
};

class UnsupportedBias : public Error {
public:
    using Error::Error;
};

class NonZeroMeanPrior : public Error {
public:
    using Error::Error;
};

class BracketTooNarrow : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NonFinite : public Error {
public:
    NonFinite(const std::string& where, std::size_t iteration)
        : Error(where + ": non-finite value at iteration " + std::to_string(iteration)),
          iteration_(iteration) {}
    std::size_t iteration() const { return iteration_; }

private:
    std::size_t iteration_;
};

}  // namespace dds
