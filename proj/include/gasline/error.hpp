/*
Copyright (c) 2026 The gasline Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gasline {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree (kernels, shape inference, plan building).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A named entity (feature, parameter, slot) does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Malformed textual input. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

/// Plan construction rejected an ill-formed step.
class PlanError : public Error {
 public:
  using Error::Error;
};

/// A plan failed validation against a graph and feature store.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> errors)
      : Error(join(errors)), errors_(std::move(errors)) {}

  const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& errors) {
    std::string out = "plan validation failed";
    for (const auto& e : errors) {
      out += "\n  - ";
      out += e;
    }
    return out;
  }

  std::vector<std::string> errors_;
};

/// A worker failed or a channel was disconnected during execution.
class ExecutionError : public Error {
 public:
  using Error::Error;
};

}  // namespace gasline
