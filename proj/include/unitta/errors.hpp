#pragma once

#include <stdexcept>
#include <string>

namespace unitta {

// Error taxonomy shared by all modules. Everything derives from Error so
// callers (and the CLI) can catch one base type.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A configuration value is out of range or internally inconsistent.
struct InvalidConfig : Error {
    explicit InvalidConfig(const std::string& msg) : Error(msg) {}
};

// The temporal-correlation/imbalance feasibility inequality failed.
struct ConstraintViolation : Error {
    explicit ConstraintViolation(const std::string& msg) : Error(msg) {}
};

// A chain with alpha_i = 1 has no unique stationary distribution.
struct DegenerateChain : Error {
    explicit DegenerateChain(const std::string& msg) : Error(msg) {}
};

// Power iteration hit its iteration cap.
struct NonConvergence : Error {
    explicit NonConvergence(const std::string& msg) : Error(msg) {}
};

// Quota masking emptied every column before the stream reached its length.
struct Exhausted : Error {
    explicit Exhausted(const std::string& msg) : Error(msg) {}
};

// COFA was asked for a prediction before any feature was cached.
struct MissingPrevious : Error {
    explicit MissingPrevious(const std::string& msg) : Error(msg) {}
};

// Stream and world dimensions disagree.
struct ConfigMismatch : Error {
    explicit ConfigMismatch(const std::string& msg) : Error(msg) {}
};

// Source fitting was given fewer samples than its precondition requires.
struct InsufficientData : Error {
    explicit InsufficientData(const std::string& msg) : Error(msg) {}
};

// A file could not be read/written or did not match its documented schema.
struct SchemaError : Error {
    explicit SchemaError(const std::string& msg) : Error(msg) {}
};

}  // namespace unitta
