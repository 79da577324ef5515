#pragma once
// Error taxonomy shared across the library and the CLI:
//   * std::invalid_argument / std::out_of_range  -> malformed configuration
//   * budget_error   -> a resource budget was exceeded (never downgraded)
//   * verdict_error  -> the computation ran but the certified answer is "no"
//   * anything else  -> internal error

#include <stdexcept>

namespace compasskit {

struct budget_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct verdict_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace compasskit
