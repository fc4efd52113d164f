#pragma once

#include <stdexcept>
#include <string>

namespace colpick {

/// Invalid configuration or input document (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The simulation reached a state it cannot leave, e.g. a deadlock with
/// unpicked items (CLI exit code 3).
class SimulationIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A policy asked for an allocation outside the valid action set.
class InvalidActionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite loss or gradient during training.
class TrainingFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace colpick
