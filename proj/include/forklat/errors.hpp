#pragma once

#include <stdexcept>
#include <string>

namespace forklat {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A requested moment integral diverges (e.g. heavy-tailed service time with
// too small a shape parameter). The scenario is outside the model's validity.
struct NonFiniteMoment : Error {
    using Error::Error;
};

// Group-based dispatch needs the group size to divide the server count.
struct IndivisibleGroup : Error {
    using Error::Error;
};

// The offered load is at or above the capacity of the queue being sampled.
struct Unstable : Error {
    using Error::Error;
};

struct InsufficientSamples : Error {
    using Error::Error;
};

struct ConfigInvalid : Error {
    using Error::Error;
};

struct ParseError : ConfigInvalid {
    using ConfigInvalid::ConfigInvalid;
};

// No retain width satisfies the cost budget. min_cost reports the smallest
// achievable estimate so the caller can raise the budget.
struct Infeasible : Error {
    double min_cost;
    Infeasible(const std::string& what, double min_cost_)
        : Error(what), min_cost(min_cost_) {}
};

}  // namespace forklat
