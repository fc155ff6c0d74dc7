#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace girsanov {

// ============================================================================
// Error taxonomy
//
// All failures surface as typed exceptions rooted at girsanov::error.
// Call sites that must degrade gracefully (e.g. a quadrature window probing
// an expression outside its domain) catch the specific type and convert it
// into an Inconclusive verdict with a diagnostic string.
// ============================================================================

class error : public std::runtime_error {
  public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Text could not be parsed into an expression.  `offset` is the byte offset
// of the first offending character in the input string.
class parse_error : public error {
  public:
    parse_error(const std::string& what, std::size_t offset)
        : error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

// An expression was evaluated at a point outside its domain (log of a
// non-positive number, division by zero, overflow to a non-finite value, ...).
class eval_error : public error {
  public:
    using error::error;
};

// A quadrature routine could not meet its contract (depth exhausted,
// singular evaluation inside a window, ...).
class quad_error : public error {
  public:
    using error::error;
};

// A precondition of an analytic routine failed (wrong domain, degenerate
// diffusion coefficient, unusable envelope, ...).
class usage_error : public error {
  public:
    using error::error;
};

// A multidimensional field is not rotationally reducible: some shell shows a
// direction-dependent value where a radial profile was required.
class not_radial_error : public error {
  public:
    not_radial_error(const std::string& what, double radius, double spread)
        : error(what), radius_(radius), spread_(spread) {}
    double radius() const { return radius_; }
    double spread() const { return spread_; }

  private:
    double radius_ = 0.0;
    double spread_ = 0.0;
};

// A run configuration violated the schema.  `pointer` is a JSON pointer to
// the offending element.
class config_error : public error {
  public:
    config_error(const std::string& what, const std::string& pointer)
        : error(what + " [" + pointer + "]"), pointer_(pointer) {}
    const std::string& pointer() const { return pointer_; }

  private:
    std::string pointer_;
};

}  // namespace girsanov
