/* Copyright 2026 The Volcon Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef VOLCON_ERRORS_HPP_
#define VOLCON_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace volcon {

// Exit codes used by the command line tool. Each error class carries the code
// it maps to so the CLI can translate exceptions without a lookup table.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kData = 3,
  kMissingArtifact = 4,
  kDegenerateTraining = 5,
};

class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ExitCode code)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Malformed file contents (bad NPY header, bad checkpoint container).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error("format error: " + what, ExitCode::kData) {}
};

/// Input values violate a data invariant (NaN amplitudes, bad shapes, ...).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error("data error: " + what, ExitCode::kData) {}
};

/// Invalid configuration or argument outside its documented bounds.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error("config error: " + what, ExitCode::kConfig) {}
};

/// A contrastive batch in which no anchor has a positive.
class DegenerateBatchError : public Error {
 public:
  explicit DegenerateBatchError(const std::string& what)
      : Error("degenerate batch: " + what, ExitCode::kDegenerateTraining) {}
};

class DegenerateOutputError : public Error {
 public:
  explicit DegenerateOutputError(const std::string& what)
      : Error("degenerate output: " + what, ExitCode::kDegenerateTraining) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what)
      : Error("training error: " + what, ExitCode::kDegenerateTraining) {}
};

/// A required artifact (checkpoint, report) does not exist.
class MissingArtifactError : public Error {
 public:
  explicit MissingArtifactError(const std::string& what)
      : Error("missing artifact: " + what, ExitCode::kMissingArtifact) {}
};

}  // namespace volcon

#endif  // VOLCON_ERRORS_HPP_
