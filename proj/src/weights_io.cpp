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

#include "clasp/weights_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "clasp/errors.hpp"

namespace clasp {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'S', 'P'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream &out, uint32_t v) {
    unsigned char buf[4];
    buf[0] = v & 0xff;
    buf[1] = (v >> 8) & 0xff;
    buf[2] = (v >> 16) & 0xff;
    buf[3] = (v >> 24) & 0xff;
    out.write(reinterpret_cast<const char *>(buf), 4);
}

uint32_t read_u32(std::istream &in, const char *field) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char *>(buf), 4);
    if (!in) {
        throw format_error(std::string("model file truncated while reading ") + field);
    }
    return uint32_t(buf[0]) | uint32_t(buf[1]) << 8 | uint32_t(buf[2]) << 16 |
           uint32_t(buf[3]) << 24;
}

void write_f32s(std::ostream &out, const std::vector<float> &data) {
    static_assert(sizeof(float) == 4);
    static_assert(std::numeric_limits<float>::is_iec559);
    for (float v : data) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        write_u32(out, bits);
    }
}

void read_f32s(std::istream &in, std::vector<float> &data, const char *field) {
    for (float &v : data) {
        uint32_t bits = read_u32(in, field);
        std::memcpy(&v, &bits, 4);
    }
}

void write_mat(std::ostream &out, const Mat &m) {
    write_f32s(out, m.data);
}

void read_mat(std::istream &in, Mat &m, int rows, int cols, const char *field) {
    m = Mat(rows, cols);
    read_f32s(in, m.data, field);
}

int checked_dim(uint32_t v, const char *field) {
    if (v == 0 || v > uint32_t(1) << 24) {
        throw format_error(std::string("model file has implausible ") + field + ": " +
                           std::to_string(v));
    }
    return int(v);
}

} // namespace

void save_model(const Model &model, const std::string &path) {
    model.config.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, uint32_t(model.config.num_layers));
    write_u32(out, uint32_t(model.config.hidden_size));
    write_u32(out, uint32_t(model.config.num_heads));
    write_u32(out, uint32_t(model.config.ffn_size));
    write_u32(out, uint32_t(model.config.vocab_size));
    write_u32(out, uint32_t(model.config.max_positions));

    const auto &w = model.weights;
    write_mat(out, w.token_embedding);
    for (const auto &layer : w.layers) {
        write_mat(out, layer.wq);
        write_mat(out, layer.wk);
        write_mat(out, layer.wv);
        write_mat(out, layer.wo);
        write_f32s(out, layer.attn_norm);
        write_f32s(out, layer.ffn_norm);
        write_mat(out, layer.w_gate);
        write_mat(out, layer.w_up);
        write_mat(out, layer.w_down);
    }
    write_f32s(out, w.final_norm);
    write_mat(out, w.lm_head);
    out.flush();
    if (!out) {
        throw std::runtime_error("failed writing model to " + path);
    }
}

Model load_model(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open model file " + path);
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw format_error("model file " + path + " has wrong magic, expected CLSP");
    }
    uint32_t version = read_u32(in, "version");
    if (version != kVersion) {
        throw format_error("model file version " + std::to_string(version) +
                           " is not supported, expected " + std::to_string(kVersion));
    }

    Model model;
    model.config.num_layers = checked_dim(read_u32(in, "num_layers"), "num_layers");
    model.config.hidden_size = checked_dim(read_u32(in, "hidden_size"), "hidden_size");
    model.config.num_heads = checked_dim(read_u32(in, "num_heads"), "num_heads");
    model.config.ffn_size = checked_dim(read_u32(in, "ffn_size"), "ffn_size");
    model.config.vocab_size = checked_dim(read_u32(in, "vocab_size"), "vocab_size");
    model.config.max_positions = checked_dim(read_u32(in, "max_positions"), "max_positions");
    model.config.validate();

    const int d = model.config.hidden_size;
    const int ffn = model.config.ffn_size;
    auto &w = model.weights;
    read_mat(in, w.token_embedding, model.config.vocab_size, d, "token_embedding");
    w.layers.resize(model.config.num_layers);
    for (auto &layer : w.layers) {
        read_mat(in, layer.wq, d, d, "wq");
        read_mat(in, layer.wk, d, d, "wk");
        read_mat(in, layer.wv, d, d, "wv");
        read_mat(in, layer.wo, d, d, "wo");
        layer.attn_norm.resize(d);
        read_f32s(in, layer.attn_norm, "attn_norm");
        layer.ffn_norm.resize(d);
        read_f32s(in, layer.ffn_norm, "ffn_norm");
        read_mat(in, layer.w_gate, d, ffn, "w_gate");
        read_mat(in, layer.w_up, d, ffn, "w_up");
        read_mat(in, layer.w_down, ffn, d, "w_down");
    }
    w.final_norm.resize(d);
    read_f32s(in, w.final_norm, "final_norm");
    read_mat(in, w.lm_head, d, model.config.vocab_size, "lm_head");

    char extra;
    if (in.read(&extra, 1)) {
        throw format_error("model file " + path + " has trailing bytes after lm_head");
    }
    return model;
}

} // namespace clasp
