#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmgp {

using Vec2 = Eigen::Vector2d;
using Points = std::vector<Vec2>;
using Tri = std::array<int, 3>;

enum class Errc {
  InvalidArgument,
  InvalidMesh,
  MultipleLoops,
  OpenLoop,
  OutsideBBox,
  ProjectionFailure,
  SelfIntersection,
  EmptyRegion,
  AbscissaMismatch,
  SingularSystem,
  MorphFailure,
  NotFound,
  NoCandidate,
  RankTooHigh,
  DimensionMismatch,
  NotPositiveDefinite,
  ZeroVelocity,
  LengthMismatch,
  EmptyCategory,
  NonPositiveTime,
  MissingMetric,
  InsideBody,
  Io,
  Format,
};

const char* to_string(Errc code) noexcept;

// Numeric failures map to CLI exit code 3, everything else to 2.
bool is_numeric_failure(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mmgp
