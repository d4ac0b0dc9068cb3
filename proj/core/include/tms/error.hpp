#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tms {

enum class Errc {
  UnsupportedToken,
  DanglingRingClosure,
  UnbalancedBranch,
  ValenceViolation,
  DisconnectedInput,
  EmptyMolecule,
  ShapeMismatch,
  DomainError,
  NonScalarRoot,
  BatchMismatch,
  MissingColumn,
  EmptyDataset,
  NonBinaryLabel,
  TooFewSamples,
  NonFiniteLoss,
  SingleClassAUC,
  ZeroVariance,
  FormatError,
  ConfigError,
};

std::string_view errc_name(Errc code) noexcept;

/// Library-wide exception; `code()` identifies the failure kind.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tms
