#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cmflow {

/// Base of every error raised by the solver.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration: unparsable text, missing/unknown keys, violated preconditions.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error(line == 0 ? what
                        : what + " (line " + std::to_string(line) + ", column " +
                              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// A field that must be strictly positive (h or f) was not.
class NonPositiveError : public Error {
 public:
  NonPositiveError(const std::string& what, std::size_t node)
      : Error(what + " at node " + std::to_string(node)), node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

class NonConvexError : public Error {
 public:
  NonConvexError(std::size_t node, double margin)
      : Error("convexity lost at node " + std::to_string(node) +
              " (min principal radius " + std::to_string(margin) + ")"),
        node_(node),
        margin_(margin) {}
  std::size_t node() const { return node_; }
  double margin() const { return margin_; }

 private:
  std::size_t node_;
  double margin_;
};

/// h or rho left the range where the power laws are evaluated.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class StiffnessError : public Error {
 public:
  using Error::Error;
};

class ConvexityLossError : public Error {
 public:
  ConvexityLossError(const std::string& what, std::size_t node)
      : Error(what), node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace cmflow
