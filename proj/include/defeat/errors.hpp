// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace defeat {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidGeometry : public Error {
public:
  using Error::Error;
};

class LookupError : public Error {
public:
  using Error::Error;
};

class GaugeRequired : public Error {
public:
  using Error::Error;
};

class SolverFailure : public Error {
public:
  SolverFailure(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

class GeometryMismatch : public Error {
public:
  using Error::Error;
};

class MeshIncompatibility : public Error {
public:
  using Error::Error;
};

class ConfigurationError : public Error {
public:
  using Error::Error;
};

class DomainError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// Refusal from the mesh generator; carries the smallest resolution that would work.
class ResolutionTooCoarse : public Error {
public:
  ResolutionTooCoarse(const std::string& what, int required)
      : Error(what), required_(required) {}
  int required_resolution() const noexcept { return required_; }

private:
  int required_;
};

} // namespace defeat
