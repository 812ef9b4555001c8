// error.hpp -- error taxonomy shared by the whole library.
//
// Every recoverable failure is thrown as Error with a stable code; the CLI
// maps InputError-class codes to exit code 1 and assertion-class failures
// (violated bounds, non-global statuses where a global one is required) to 2.
#pragma once

#include <stdexcept>
#include <string>

namespace causalot {

enum class ErrorCode {
  // graph / model validation
  VertexOutOfRange,
  DuplicateEdge,
  CycleDetected,
  EmptySpace,
  DuplicateAtom,
  CoordinateMismatch,
  NegativeWeight,
  WeightSumOff,
  DuplicateSupportPoint,
  ZeroMassConditioning,
  NotCompatible,
  // scm
  MissingRow,
  SupportExplosion,
  // metric / cost
  AsymmetricInput,
  NegativeEntry,
  NonzeroDiagonal,
  MissingPair,
  MissingEmbedding,
  DimensionMismatch,
  // programs / kernels
  MuNotCompatible,
  MarginalNotCompatible,
  SelectionShapeMismatch,
  ShapeMismatch,
  InfeasibleKernel,
  // solver
  Infeasible,
  Unbounded,
  DimensionCap,
  CapExceeded,
  EnumerationCap,
  NonGlobalStatus,
  // wasserstein
  NotASubgraph,
  // inference
  MissingArm,
  GateFailed,
  DagMismatch,
  // interpolation
  NoEmbedding,
  // io / cli
  ParseError,
  IoError,
  BadArgument,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::VertexOutOfRange: return "VertexOutOfRange";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::EmptySpace: return "EmptySpace";
    case ErrorCode::DuplicateAtom: return "DuplicateAtom";
    case ErrorCode::CoordinateMismatch: return "CoordinateMismatch";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::WeightSumOff: return "WeightSumOff";
    case ErrorCode::DuplicateSupportPoint: return "DuplicateSupportPoint";
    case ErrorCode::ZeroMassConditioning: return "ZeroMassConditioning";
    case ErrorCode::NotCompatible: return "NotCompatible";
    case ErrorCode::MissingRow: return "MissingRow";
    case ErrorCode::SupportExplosion: return "SupportExplosion";
    case ErrorCode::AsymmetricInput: return "AsymmetricInput";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::NonzeroDiagonal: return "NonzeroDiagonal";
    case ErrorCode::MissingPair: return "MissingPair";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MuNotCompatible: return "MuNotCompatible";
    case ErrorCode::MarginalNotCompatible: return "MarginalNotCompatible";
    case ErrorCode::SelectionShapeMismatch: return "SelectionShapeMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InfeasibleKernel: return "InfeasibleKernel";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::DimensionCap: return "DimensionCap";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::EnumerationCap: return "EnumerationCap";
    case ErrorCode::NonGlobalStatus: return "NonGlobalStatus";
    case ErrorCode::NotASubgraph: return "NotASubgraph";
    case ErrorCode::MissingArm: return "MissingArm";
    case ErrorCode::GateFailed: return "GateFailed";
    case ErrorCode::DagMismatch: return "DagMismatch";
    case ErrorCode::NoEmbedding: return "NoEmbedding";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BadArgument: return "BadArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace causalot
