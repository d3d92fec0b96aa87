#include "ecgsynth/error.hpp"

namespace ecgsynth {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::GainZero: return "GainZero";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::UnknownLead: return "UnknownLead";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::InvalidCutoffs: return "InvalidCutoffs";
    case ErrorCode::NoBeatsFound: return "NoBeatsFound";
    case ErrorCode::ImplausibleBeat: return "ImplausibleBeat";
    case ErrorCode::MissingLandmark: return "MissingLandmark";
    case ErrorCode::InsufficientBeats: return "InsufficientBeats";
    case ErrorCode::LeadMissing: return "LeadMissing";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::EmptyLibrary: return "EmptyLibrary";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::ModelMissing: return "ModelMissing";
    case ErrorCode::ModelFormat: return "ModelFormat";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingLead: return "MissingLead";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::RecordTooShort: return "RecordTooShort";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ScheduleOutOfRange: return "ScheduleOutOfRange";
  }
  return "Unknown";
}

}  // namespace ecgsynth
