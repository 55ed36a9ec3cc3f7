/* Copyright 2026 The detcal Authors. All Rights Reserved.

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
#ifndef DETCAL_ERROR_HPP_
#define DETCAL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace detcal {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, broken referential integrity, values out
// of range. The CLI maps this to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A measure is undefined on the given input (e.g. no detections at all).
class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace detcal

#endif  // DETCAL_ERROR_HPP_
