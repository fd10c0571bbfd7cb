#pragma once

#include <stdexcept>
#include <string>

namespace invnav {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// log() called on a heading at (or numerically next to) +-pi.
class AntipodalHeading : public Error {
 public:
  using Error::Error;
};

/// Invalid scenario / filter / smoother configuration.
class BadConfig : public Error {
 public:
  using Error::Error;
};

/// H P H^T + N is not invertible.
class SingularInnovation : public Error {
 public:
  using Error::Error;
};

class NonPositiveSample : public Error {
 public:
  using Error::Error;
};

/// The trajectory handed to the closed-form cross check does not satisfy its
/// preconditions (straight line, constant speed, noise free).
class ScenarioMismatch : public Error {
 public:
  using Error::Error;
};

class WindowMismatch : public Error {
 public:
  using Error::Error;
};

class SingularNormalEquations : public Error {
 public:
  using Error::Error;
};

class UnknownExperiment : public Error {
 public:
  using Error::Error;
};

/// Wraps an error raised while processing step `step` of a run.
class StepError : public Error {
 public:
  StepError(std::size_t step, double time, const std::string& what)
      : Error("step " + std::to_string(step) + " (t=" + std::to_string(time) +
              "): " + what),
        step_(step),
        time_(time) {}

  std::size_t step() const { return step_; }
  double time() const { return time_; }

 private:
  std::size_t step_;
  double time_;
};

}  // namespace invnav
