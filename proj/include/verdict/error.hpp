#pragma once

#include <stdexcept>
#include <string>

namespace verdict {

enum class ErrorKind {
  kIo,              // file missing / unreadable
  kMalformedCsv,    // structural CSV problem (quoting, column count)
  kSchema,          // header or column-name mismatch
  kDomain,          // value outside its allowed domain
  kDuplicatePair,   // repeated pair id in a matrix
  kDegenerateLf,    // labeling function column with no non-abstain vote
  kModeMismatch,    // transitivity mode incompatible with the task kind
  kEmptyInput,      // operation requires a non-empty intersection/input
  kNumeric,         // non-finite value where one is not allowed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace verdict
