#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bcd {

// Invalid caller input (bad sizes, out-of-range parameters, incompatible pairs).
using argument_error = std::invalid_argument;

class parse_error : public std::runtime_error
{
public:
    parse_error(std::size_t line, const std::string& what)
        : std::runtime_error(
              line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line)
    {}

    // 1-based; 0 when the error is not tied to a line.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A quantity that must hold by construction (G_i >= 0, r >= 0, ...) did not.
class consistency_error : public std::logic_error
{
    using std::logic_error::logic_error;
};

// A proposal was applied to a state other than the one it was built against.
class contract_violation : public std::logic_error
{
    using std::logic_error::logic_error;
};

class numerical_error : public std::runtime_error
{
    using std::runtime_error::runtime_error;
};

} // namespace bcd
