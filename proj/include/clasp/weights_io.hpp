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

#include <string>

#include "clasp/model.hpp"

namespace clasp {

// Binary model file, little-endian:
//   magic "CLSP", u32 version, six u32 config fields
//   (num_layers, hidden_size, num_heads, ffn_size, vocab_size, max_positions),
//   then f32 tensors in fixed order: token_embedding; per layer wq, wk, wv,
//   wo, attn_norm, ffn_norm, w_gate, w_up, w_down; final_norm; lm_head.
// Matrices are row-major with shape in_dim x out_dim (y = x * W).

void save_model(const Model &model, const std::string &path);
Model load_model(const std::string &path);

} // namespace clasp
