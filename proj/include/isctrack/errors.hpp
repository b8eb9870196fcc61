#pragma once

#include <stdexcept>
#include <string>

namespace isctrack {

/// Geometry for which a steering vector or distance-dependent quantity is
/// undefined (zero UAV–target separation).
class DegenerateGeometryError : public std::domain_error {
 public:
  explicit DegenerateGeometryError(const std::string& what)
      : std::domain_error(what) {}
};

/// A closed-form beamformer cannot meet its hard constraint even at full
/// transmit power.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Factorization or iteration breakdown.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace isctrack
