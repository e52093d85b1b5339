// Copyright 2026 The latprune Authors
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

#ifndef LATPRUNE_ERROR_HPP_
#define LATPRUNE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace latprune {

// Bad input: malformed spec, config, instance, or out-of-range query.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No selection satisfies the budget (e.g. mandatory groups alone exceed it).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace latprune

#endif  // LATPRUNE_ERROR_HPP_
