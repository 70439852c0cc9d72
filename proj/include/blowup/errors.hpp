#pragma once

#include <stdexcept>
#include <string>

namespace blowup {

// Exit-code buckets used by the CLI: parse/config problems map to 2,
// numerical failures to 4. Condition verdicts are not exceptions.
enum class ErrorClass { Parse, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, std::string msg)
        : std::runtime_error(std::move(msg)), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

struct SyntaxError : Error {
    SyntaxError(std::size_t pos, const std::string& what_happened)
        : Error(ErrorClass::Parse,
                "syntax error at position " + std::to_string(pos) + ": " + what_happened),
          position(pos) {}
    std::size_t position;
};

struct UnknownVariable : Error {
    explicit UnknownVariable(const std::string& name)
        : Error(ErrorClass::Parse, "unknown variable '" + name + "'"), variable(name) {}
    std::string variable;
};

struct MissingBinding : Error {
    explicit MissingBinding(const std::string& name)
        : Error(ErrorClass::Numerical, "missing binding for variable '" + name + "'") {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct EvalError : Error {
    explicit EvalError(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct OutOfRange : Error {
    explicit OutOfRange(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct GrowthViolated : Error {
    explicit GrowthViolated(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct QuadratureFailure : Error {
    explicit QuadratureFailure(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct StepUnderflow : Error {
    explicit StepUnderflow(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct NoConvergence : Error {
    explicit NoConvergence(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct BracketFailure : Error {
    explicit BracketFailure(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct IterationLimit : Error {
    explicit IterationLimit(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct NewtonDivergence : Error {
    explicit NewtonDivergence(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct NonPositiveSample : Error {
    explicit NonPositiveSample(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct DivergentSide : Error {
    explicit DivergentSide(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct WrongMode : Error {
    explicit WrongMode(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct RangeMismatch : Error {
    explicit RangeMismatch(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct Precondition : Error {
    explicit Precondition(const std::string& msg) : Error(ErrorClass::Numerical, msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(ErrorClass::Parse, msg) {}
};

}  // namespace blowup
