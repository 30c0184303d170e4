// Copyright (c) 2026, advdm-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace advdm {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A gradient was requested for a tensor that was never marked as a leaf on the tape.
class MissingLeafError : public Error {
 public:
  using Error::Error;
};

/// Diffusion timestep outside [1, T].
class StepError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(std::size_t step, const std::string& what)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Non-finite gradient or value encountered inside an iterative attack.
class NumericError : public Error {
 public:
  NumericError(std::size_t step, const std::string& what)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Too few samples for a covariance estimate.
class SampleSizeError : public Error {
 public:
  using Error::Error;
};

/// Invalid neighbourhood size for k-NN metrics.
class NeighborCountError : public Error {
 public:
  using Error::Error;
};

/// Operation requires pixel data but was given something else.
class ModeError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class MagicMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedFileError : public FormatError {
 public:
  TruncatedFileError(std::size_t expected, std::size_t actual, const std::string& what)
      : FormatError(what + ": expected " + std::to_string(expected) + " bytes, found " +
                    std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}
  std::size_t expected_length() const noexcept { return expected_; }
  std::size_t actual_length() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class CountMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class HashMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace advdm
