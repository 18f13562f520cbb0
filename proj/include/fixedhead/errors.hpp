/*
 * Copyright 2026 The fixedhead Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace fixedhead {

// Root of every error the library throws. Subclasses name the failure class
// so callers (and tests) can tell a bad shape from a bad file.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FIXEDHEAD_DEFINE_ERROR(Name)         \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

FIXEDHEAD_DEFINE_ERROR(InvalidShapeError);   // zero/negative dimension
FIXEDHEAD_DEFINE_ERROR(ShapeError);          // incompatible operand shapes
FIXEDHEAD_DEFINE_ERROR(LabelError);          // class label out of range
FIXEDHEAD_DEFINE_ERROR(ContractError);       // API misuse (non-scalar loss, missing grad)
FIXEDHEAD_DEFINE_ERROR(DegenerateStatisticsError);
FIXEDHEAD_DEFINE_ERROR(InvalidOrderError);   // Hadamard order not a power of two
FIXEDHEAD_DEFINE_ERROR(DimensionError);      // head / class-count incompatibility
FIXEDHEAD_DEFINE_ERROR(ParseError);
FIXEDHEAD_DEFINE_ERROR(SpecError);           // architecture description inconsistent
FIXEDHEAD_DEFINE_ERROR(FormatError);
FIXEDHEAD_DEFINE_ERROR(LengthError);
FIXEDHEAD_DEFINE_ERROR(ConfigError);
FIXEDHEAD_DEFINE_ERROR(UnsupportedHeadError);
FIXEDHEAD_DEFINE_ERROR(PreconditionError);
FIXEDHEAD_DEFINE_ERROR(DivergenceError);     // non-finite loss during training
FIXEDHEAD_DEFINE_ERROR(IoError);

#undef FIXEDHEAD_DEFINE_ERROR

}  // namespace fixedhead
