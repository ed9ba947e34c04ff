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

#include "clasp/prompts.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "clasp/errors.hpp"
#include "clasp/rng.hpp"

namespace clasp {

using json = nlohmann::ordered_json;

std::vector<int> encode_bytes(const std::string &text) {
    std::vector<int> tokens;
    tokens.reserve(text.size());
    for (unsigned char c : text) {
        tokens.push_back(int(c));
    }
    return tokens;
}

std::string decode_bytes(std::span<const int> tokens) {
    std::string text;
    text.reserve(tokens.size());
    for (int t : tokens) {
        if (t < 0 || t > 255) {
            throw std::invalid_argument("decode_bytes: token " + std::to_string(t) +
                                        " is not a byte");
        }
        text.push_back(char(static_cast<unsigned char>(t)));
    }
    return text;
}

namespace {

std::string where(const std::string &origin, size_t line) {
    return origin + " line " + std::to_string(line);
}

} // namespace

PromptSet parse_prompts(const std::string &jsonl, const std::string &origin) {
    PromptSet out;
    std::set<std::string> seen;
    std::istringstream in(jsonl);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error &e) {
            throw format_error(where(origin, line_no) + ": " + e.what());
        }
        if (!rec.is_object()) {
            throw format_error(where(origin, line_no) + ": record is not an object");
        }
        PromptRecord p;
        if (!rec.contains("id") || !rec["id"].is_string()) {
            throw format_error(where(origin, line_no) + ": missing string field \"id\"");
        }
        p.id = rec["id"].get<std::string>();
        if (!seen.insert(p.id).second) {
            throw format_error(where(origin, line_no) + ": duplicate id \"" + p.id + "\"");
        }
        const bool has_text = rec.contains("text");
        const bool has_tokens = rec.contains("tokens");
        if (has_text == has_tokens) {
            throw format_error(where(origin, line_no) +
                               ": record needs exactly one of \"text\" or \"tokens\"");
        }
        if (has_text) {
            if (!rec["text"].is_string()) {
                throw format_error(where(origin, line_no) + ": \"text\" is not a string");
            }
            p.text = rec["text"].get<std::string>();
            if (p.text.empty()) {
                throw format_error(where(origin, line_no) + ": \"text\" is empty");
            }
            p.tokens = encode_bytes(p.text);
        } else {
            if (!rec["tokens"].is_array() || rec["tokens"].empty()) {
                throw format_error(where(origin, line_no) +
                                   ": \"tokens\" is not a nonempty array");
            }
            for (const auto &t : rec["tokens"]) {
                if (!t.is_number_integer() || t.get<int64_t>() < 0 || t.get<int64_t>() > 255) {
                    throw format_error(where(origin, line_no) +
                                       ": \"tokens\" entries must be byte values in [0, 255]");
                }
                p.tokens.push_back(int(t.get<int64_t>()));
            }
        }
        if (rec.contains("max_new_tokens")) {
            if (!rec["max_new_tokens"].is_number_integer() ||
                rec["max_new_tokens"].get<int64_t>() < 1) {
                throw format_error(where(origin, line_no) +
                                   ": \"max_new_tokens\" must be a positive integer");
            }
            p.max_new_tokens = int(rec["max_new_tokens"].get<int64_t>());
        }
        out.records.push_back(std::move(p));
    }
    if (out.records.empty()) {
        throw format_error(origin + ": no prompt records");
    }
    return out;
}

std::string serialize_prompts(const PromptSet &prompts) {
    std::string out;
    for (const auto &p : prompts.records) {
        json rec;
        rec["id"] = p.id;
        if (!p.text.empty()) {
            rec["text"] = p.text;
        } else {
            rec["tokens"] = p.tokens;
        }
        if (p.max_new_tokens > 0) {
            rec["max_new_tokens"] = p.max_new_tokens;
        }
        out += rec.dump();
        out += '\n';
    }
    return out;
}

PromptSet load_prompts(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open prompt file " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_prompts(buf.str(), path);
}

void save_prompts(const PromptSet &prompts, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out << serialize_prompts(prompts);
    if (!out) {
        throw std::runtime_error("failed writing prompts to " + path);
    }
}

PromptSet synthetic_prompts(int count, int min_len, int max_len, uint64_t seed) {
    if (count < 1 || min_len < 1 || max_len < min_len) {
        throw std::invalid_argument("synthetic_prompts: bad count or length range");
    }
    Rng rng(seed);
    PromptSet out;
    for (int i = 0; i < count; ++i) {
        PromptRecord p;
        char id[16];
        std::snprintf(id, sizeof(id), "p%04d", i);
        p.id = id;
        const int len = min_len + int(rng.uniform_int(uint64_t(max_len - min_len + 1)));
        p.text.reserve(len);
        for (int c = 0; c < len; ++c) {
            p.text.push_back(char(' ' + int(rng.uniform_int(95))));
        }
        p.tokens = encode_bytes(p.text);
        out.records.push_back(std::move(p));
    }
    return out;
}

} // namespace clasp
