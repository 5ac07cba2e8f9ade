#ifndef OOD_ERRORS_HPP
#define OOD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ood {

// Bad experiment configuration (unknown keys, method/artifact mismatch, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (CSV/IDX parse failures, label range, ...).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Loss became non-finite during optimization.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(const std::string& msg, int epoch)
        : std::runtime_error(msg), epoch(epoch) {}
    int epoch;
};

// A class partition has fewer members than the requested k.
class InsufficientClassSamples : public std::invalid_argument {
public:
    InsufficientClassSamples(const std::string& msg, int class_id)
        : std::invalid_argument(msg), class_id(class_id) {}
    int class_id;
};

} // namespace ood

#endif
