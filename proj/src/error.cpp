#include "rfa/error.hpp"

namespace rfa {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::MultipleInputs: return "MultipleInputs";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::UnreachableVertex: return "UnreachableVertex";
    case ErrorCode::MissingPredecessor: return "MissingPredecessor";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::InvalidLayer: return "InvalidLayer";
    case ErrorCode::UnknownVertex: return "UnknownVertex";
    case ErrorCode::UnknownChannels: return "UnknownChannels";
    case ErrorCode::PathExplosion: return "PathExplosion";
    case ErrorCode::NothingToRefine: return "NothingToRefine";
    case ErrorCode::NoFeasibleProposal: return "NoFeasibleProposal";
    case ErrorCode::RemovalBreaksGraph: return "RemovalBreaksGraph";
    case ErrorCode::CannotMeetTolerance: return "CannotMeetTolerance";
    case ErrorCode::StaleProposal: return "StaleProposal";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::MissingKernelAttribute: return "MissingKernelAttribute";
    case ErrorCode::UnsupportedOperator: return "UnsupportedOperator";
    case ErrorCode::TerminalDisplaced: return "TerminalDisplaced";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownReference: return "UnknownReference";
  }
  return "Unknown";
}

}  // namespace rfa
