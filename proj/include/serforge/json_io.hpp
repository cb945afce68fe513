/* Copyright 2026 The serforge Authors. All Rights Reserved.

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

#ifndef SERFORGE_JSON_IO_HPP_
#define SERFORGE_JSON_IO_HPP_

#include <string>

#include <json.hpp>

#include "serforge/audio.hpp"
#include "serforge/error.hpp"
#include "serforge/nn.hpp"

namespace serforge {

std::string window_name(WindowKind kind);
WindowKind parse_window(const std::string& name);

nlohmann::json to_json(const FrameConfig& config);
// Missing keys keep the values already in `config`.
FrameConfig frame_config_from_json(const nlohmann::json& j, FrameConfig config = {});

// Tensor container: {name: {"rows", "cols", "data" (column-major)}}.
template <typename Params>
nlohmann::json tensors_to_json(const Params& params) {
  nlohmann::json out = nlohmann::json::object();
  params.for_each("", [&](const std::string& name, const nn::Matrix& m) {
    std::vector<double> data(m.data(), m.data() + m.size());
    out[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
  });
  return out;
}

// Fills an already-shaped parameter struct; shapes must agree.
template <typename Params>
void tensors_from_json(Params& params, const nlohmann::json& tensors) {
  params.for_each("", [&](const std::string& name, nn::Matrix& m) {
    if (!tensors.contains(name)) throw Error(ErrorCode::kCorruptHeader, "checkpoint lacks tensor " + name);
    const auto& t = tensors.at(name);
    if (t.at("rows").get<long>() != m.rows() || t.at("cols").get<long>() != m.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "checkpoint tensor " + name + " has the wrong shape");
    }
    const auto data = t.at("data").get<std::vector<double>>();
    if (static_cast<long>(data.size()) != m.size()) {
      throw Error(ErrorCode::kCorruptHeader, "checkpoint tensor " + name + " has the wrong size");
    }
    std::copy(data.begin(), data.end(), m.data());
  });
}

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);

}  // namespace serforge

#endif  // SERFORGE_JSON_IO_HPP_
