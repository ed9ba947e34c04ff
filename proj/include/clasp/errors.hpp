// Copyright 2026 clasp Authors
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

namespace clasp {

// Malformed or truncated file content. The message names the offending field.
class format_error : public std::runtime_error {
public:
    explicit format_error(const std::string &msg) : std::runtime_error(msg) {}
};

// A forward pass would exceed the model's position limit.
class context_overflow_error : public std::runtime_error {
public:
    explicit context_overflow_error(const std::string &msg) : std::runtime_error(msg) {}
};

// An enumeration whose size exceeds the configured budget.
class budget_exceeded_error : public std::runtime_error {
public:
    explicit budget_exceeded_error(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace clasp
