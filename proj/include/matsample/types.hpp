#ifndef MATSAMPLE_TYPES_HPP
#define MATSAMPLE_TYPES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace matsample {

using index_t = std::int64_t;
using value_t = double;

// Raised when a caller breaks an operation's documented precondition.
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& what)
        : std::invalid_argument(what) {}
};

inline void require(bool condition, const char* message) {
    if (!condition) throw ContractViolation(message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ContractViolation(message);
}

}  // namespace matsample

#endif  // MATSAMPLE_TYPES_HPP
