#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace flowbench {

// All library failures throw Error with a stable machine-parsable kind tag.
// The CLI prints failures as a single line: "error[<kind>]: <detail>".
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& detail)
      : std::runtime_error(detail), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

[[noreturn]] inline void fail(std::string kind, const std::string& detail) {
  throw Error(std::move(kind), detail);
}

// Stable kind tags.
namespace errk {
inline constexpr const char* rank = "rank";
inline constexpr const char* input = "input";
inline constexpr const char* shape = "shape";
inline constexpr const char* symmetry = "symmetry";
inline constexpr const char* convergence = "convergence";
inline constexpr const char* conditioning = "conditioning";
inline constexpr const char* format = "format";
inline constexpr const char* corruption = "corruption";
inline constexpr const char* schema = "schema";
inline constexpr const char* io = "io";
inline constexpr const char* estimation = "estimation";
inline constexpr const char* regularization = "regularization";
inline constexpr const char* factorization = "factorization";
inline constexpr const char* identifiability = "identifiability";
inline constexpr const char* undefined_metric = "undefined-metric";
inline constexpr const char* warmup = "warmup";
inline constexpr const char* insufficient_history = "insufficient-history";
inline constexpr const char* evaluation = "evaluation";
inline constexpr const char* config = "config";
}  // namespace errk

}  // namespace flowbench
