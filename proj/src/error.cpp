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

#include "earresp/error.hpp"

namespace earresp {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParameter:
      return "parameter";
    case ErrorCode::kAlignment:
      return "alignment";
    case ErrorCode::kDivergence:
      return "divergence";
    case ErrorCode::kInsufficientData:
      return "insufficient-data";
    case ErrorCode::kDegenerate:
      return "degenerate";
    case ErrorCode::kFormat:
      return "format";
    case ErrorCode::kIo:
      return "io";
    case ErrorCode::kUndefinedMetric:
      return "undefined-metric";
  }
  return "unknown";
}

}  // namespace earresp
