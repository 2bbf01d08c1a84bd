// Copyright 2026 The VISA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VISA_ERROR_HPP
#define VISA_ERROR_HPP

#include <stdexcept>
#include <string>

namespace visa {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No importance sample has a finite log-weight.
class DegenerateWeightsError : public Error {
 public:
  DegenerateWeightsError() : Error("degenerate importance weights: no sample lies in the model support") {}
  using Error::Error;
};

/// A point lies outside the support of the variational family.
class OutOfSupportError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFamilyError : public Error {
 public:
  using Error::Error;
};

class UnsupportedModelError : public Error {
 public:
  using Error::Error;
};

class NonFiniteGradientError : public Error {
 public:
  NonFiniteGradientError() : Error("optimizer received a non-finite gradient") {}
};

class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// Random-walk Metropolis chain never moved after burn-in.
class NonMixingError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration. `path()` is a JSON pointer to the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  [[nodiscard]] const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace visa

#endif  // VISA_ERROR_HPP
