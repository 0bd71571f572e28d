// Copyright 2026 The Panoworld Authors
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

#include <stdexcept>
#include <string>

namespace panoworld {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PANOWORLD_DEFINE_ERROR(Name)          \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

PANOWORLD_DEFINE_ERROR(DimensionError);
PANOWORLD_DEFINE_ERROR(RangeError);
PANOWORLD_DEFINE_ERROR(DegenerateInputError);
PANOWORLD_DEFINE_ERROR(ParameterError);
PANOWORLD_DEFINE_ERROR(DecodeError);
PANOWORLD_DEFINE_ERROR(IoError);
PANOWORLD_DEFINE_ERROR(SpecError);
PANOWORLD_DEFINE_ERROR(LookupError);
PANOWORLD_DEFINE_ERROR(ConfigError);
PANOWORLD_DEFINE_ERROR(ConsistencyError);
PANOWORLD_DEFINE_ERROR(DetectionError);
PANOWORLD_DEFINE_ERROR(GenerationError);
PANOWORLD_DEFINE_ERROR(ProtocolError);

#undef PANOWORLD_DEFINE_ERROR

}  // namespace panoworld
