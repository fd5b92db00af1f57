// Copyright 2026 The earresp Authors
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace earresp {

enum class ErrorCode {
  kParameter = 1,
  kAlignment,
  kDivergence,
  kInsufficientData,
  kDegenerate,
  kFormat,
  kIo,
  kUndefinedMetric,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the adaptive filter when a weight becomes non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t sample_index, const std::string& what)
      : Error(ErrorCode::kDivergence, what), sample_index_(sample_index) {}

  std::size_t sample_index() const { return sample_index_; }

 private:
  std::size_t sample_index_;
};

// Malformed container data; carries the byte offset where parsing failed.
class FormatError : public Error {
 public:
  FormatError(std::size_t byte_offset, const std::string& what)
      : Error(ErrorCode::kFormat,
              what + " (at byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void Require(bool condition, const std::string& what) {
  if (!condition) throw Error(ErrorCode::kParameter, what);
}

}  // namespace earresp
