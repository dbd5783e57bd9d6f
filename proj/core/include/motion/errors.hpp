#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace motion {

// Error classes line up with the CLI exit codes: validation 2, numeric 3, I/O 4.

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : IoError {
  using IoError::IoError;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}
  explicit ValidationError(const std::string& violation)
      : ValidationError(std::vector<std::string>{violation}) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& vs) {
    std::string out = "invalid configuration:";
    for (const auto& v : vs) {
      out += "\n  - " + v;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

}  // namespace motion
