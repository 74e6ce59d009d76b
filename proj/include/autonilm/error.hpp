#pragma once

#include <stdexcept>
#include <string>

namespace autonilm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable, malformed or inconsistent input data (files, series).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or usage, detected before any work starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A value lies outside the domain of its parameter.
class DomainError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(int epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace autonilm
