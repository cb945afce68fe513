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

#include "serforge/json_io.hpp"

#include <fstream>

namespace serforge {

std::string window_name(WindowKind kind) {
  switch (kind) {
    case WindowKind::kHann: return "hann";
    case WindowKind::kHamming: return "hamming";
    case WindowKind::kRectangular: return "rectangular";
  }
  return "hann";
}

WindowKind parse_window(const std::string& name) {
  if (name == "hann") return WindowKind::kHann;
  if (name == "hamming") return WindowKind::kHamming;
  if (name == "rectangular") return WindowKind::kRectangular;
  throw Error(ErrorCode::kConfigError, "unknown window '" + name + "'");
}

nlohmann::json to_json(const FrameConfig& config) {
  return {{"frame_length", config.frame_length},
          {"hop_length", config.hop_length},
          {"window", window_name(config.window)}};
}

FrameConfig frame_config_from_json(const nlohmann::json& j, FrameConfig config) {
  if (j.contains("frame_length")) config.frame_length = j.at("frame_length").get<int>();
  if (j.contains("hop_length")) config.hop_length = j.at("hop_length").get<int>();
  if (j.contains("window")) config.window = parse_window(j.at("window").get<std::string>());
  return config;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path);
}

}  // namespace serforge
