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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace clasp {

// One JSONL record per prompt: {"id": ..., "text": ...} or
// {"id": ..., "tokens": [...]}, plus optional "max_new_tokens". Text is
// tokenized by the identity byte-level tokenizer (vocab 256).
struct PromptRecord {
    std::string id;
    std::string text;
    std::vector<int> tokens;
    int max_new_tokens = 0;  // 0 means use the run's default

    bool operator==(const PromptRecord &) const = default;
};

struct PromptSet {
    std::vector<PromptRecord> records;

    bool operator==(const PromptSet &) const = default;
};

std::vector<int> encode_bytes(const std::string &text);
std::string decode_bytes(std::span<const int> tokens);

PromptSet parse_prompts(const std::string &jsonl, const std::string &origin);
std::string serialize_prompts(const PromptSet &prompts);
PromptSet load_prompts(const std::string &path);
void save_prompts(const PromptSet &prompts, const std::string &path);

// Seeded printable-ASCII prompts for benchmarks and studies.
PromptSet synthetic_prompts(int count, int min_len, int max_len, uint64_t seed);

} // namespace clasp
