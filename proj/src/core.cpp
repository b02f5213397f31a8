#include "mmgp/core.hpp"

namespace mmgp {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidMesh: return "InvalidMesh";
    case Errc::MultipleLoops: return "MultipleLoops";
    case Errc::OpenLoop: return "OpenLoop";
    case Errc::OutsideBBox: return "OutsideBBox";
    case Errc::ProjectionFailure: return "ProjectionFailure";
    case Errc::SelfIntersection: return "SelfIntersection";
    case Errc::EmptyRegion: return "EmptyRegion";
    case Errc::AbscissaMismatch: return "AbscissaMismatch";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::MorphFailure: return "MorphFailure";
    case Errc::NotFound: return "NotFound";
    case Errc::NoCandidate: return "NoCandidate";
    case Errc::RankTooHigh: return "RankTooHigh";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::ZeroVelocity: return "ZeroVelocity";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyCategory: return "EmptyCategory";
    case Errc::NonPositiveTime: return "NonPositiveTime";
    case Errc::MissingMetric: return "MissingMetric";
    case Errc::InsideBody: return "InsideBody";
    case Errc::Io: return "Io";
    case Errc::Format: return "Format";
  }
  return "Unknown";
}

bool is_numeric_failure(Errc code) noexcept {
  switch (code) {
    case Errc::SingularSystem:
    case Errc::MorphFailure:
    case Errc::NoCandidate:
    case Errc::NotPositiveDefinite:
    case Errc::ProjectionFailure:
      return true;
    default:
      return false;
  }
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace mmgp
