#include "tms/error.hpp"

namespace tms {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::UnsupportedToken: return "UnsupportedToken";
    case Errc::DanglingRingClosure: return "DanglingRingClosure";
    case Errc::UnbalancedBranch: return "UnbalancedBranch";
    case Errc::ValenceViolation: return "ValenceViolation";
    case Errc::DisconnectedInput: return "DisconnectedInput";
    case Errc::EmptyMolecule: return "EmptyMolecule";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::DomainError: return "DomainError";
    case Errc::NonScalarRoot: return "NonScalarRoot";
    case Errc::BatchMismatch: return "BatchMismatch";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::NonBinaryLabel: return "NonBinaryLabel";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::SingleClassAUC: return "SingleClassAUC";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::FormatError: return "FormatError";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace tms
