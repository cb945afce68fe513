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

#include "serforge/audio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "serforge/error.hpp"

namespace serforge {

void validate(const Waveform& w) {
  if (w.sample_rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "sample rate must be positive");
  }
  if (w.samples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "waveform has no samples");
  }
  for (double s : w.samples) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidArgument, "waveform holds a non-finite sample");
    }
  }
}

void clip_in_place(Waveform& w) {
  for (double& s : w.samples) s = std::clamp(s, -1.0, 1.0);
}

void validate(const FrameConfig& config) {
  if (config.frame_length <= 0 || !std::has_single_bit(static_cast<unsigned>(config.frame_length))) {
    throw Error(ErrorCode::kInvalidArgument, "frame_length must be a power of two");
  }
  if (config.hop_length <= 0 || config.hop_length > config.frame_length) {
    throw Error(ErrorCode::kInvalidArgument, "hop_length must be in (0, frame_length]");
  }
}

std::vector<double> make_window(const FrameConfig& config) {
  const int n = config.frame_length;
  std::vector<double> w(n, 1.0);
  const double step = 2.0 * std::numbers::pi / n;
  switch (config.window) {
    case WindowKind::kHann:
      for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(step * i);
      break;
    case WindowKind::kHamming:
      for (int i = 0; i < n; ++i) w[i] = 0.54 - 0.46 * std::cos(step * i);
      break;
    case WindowKind::kRectangular:
      break;
  }
  return w;
}

int num_frames_for(std::size_t num_samples, const FrameConfig& config) {
  const auto len = static_cast<std::size_t>(config.frame_length);
  if (num_samples <= len) return 1;
  const auto hop = static_cast<std::size_t>(config.hop_length);
  return static_cast<int>(1 + (num_samples - len + hop - 1) / hop);
}

void fft_in_place(std::vector<std::complex<double>>& data, bool inverse) {
  const std::size_t n = data.size();
  if (n == 0 || !std::has_single_bit(n)) {
    throw Error(ErrorCode::kInvalidArgument, "fft size must be a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  // Forward twiddles for the full size; stage `len` uses every (n/len)-th.
  thread_local std::array<std::vector<std::complex<double>>, 64> tables;
  auto& table = tables[std::countr_zero(n)];
  if (table.size() != n / 2) {
    table.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      table[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> w = inverse ? std::conj(table[k * stride]) : table[k * stride];
        const std::complex<double> u = data[start + k];
        const std::complex<double> v = data[start + k + half] * w;
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& z : data) z *= scale;
  }
}

std::vector<std::complex<double>> rfft(std::span<const double> block) {
  std::vector<std::complex<double>> buf(block.begin(), block.end());
  fft_in_place(buf, false);
  buf.resize(block.size() / 2 + 1);
  return buf;
}

std::vector<double> irfft(std::span<const std::complex<double>> half, int n) {
  std::vector<std::complex<double>> buf(n);
  const int nb = n / 2 + 1;
  for (int k = 0; k < nb; ++k) buf[k] = half[k];
  for (int k = nb; k < n; ++k) buf[k] = std::conj(half[n - k]);
  // DC and Nyquist of a real signal are real.
  buf[0] = {half[0].real(), 0.0};
  if (n > 1) buf[n / 2] = {half[n / 2].real(), 0.0};
  fft_in_place(buf, true);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = buf[i].real();
  return out;
}

namespace {

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kCorruptHeader, "missing RIFF/WAVE signature in " + path.string());
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) {
        throw Error(ErrorCode::kCorruptHeader, "truncated fmt chunk");
      }
      const unsigned char* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      sample_rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 26) throw Error(ErrorCode::kCorruptHeader, "truncated extensible fmt chunk");
        format = read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Writers that stream audio sometimes leave the size field unpatched.
      data_size = std::min<std::size_t>(size, bytes.size() - body);
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) throw Error(ErrorCode::kCorruptHeader, "no fmt chunk");
  if (data == nullptr) throw Error(ErrorCode::kCorruptHeader, "no data chunk");
  if (channels == 0 || sample_rate == 0) {
    throw Error(ErrorCode::kCorruptHeader, "zero channels or sample rate");
  }
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "only PCM 16-bit and IEEE float 32-bit are supported (format " +
                    std::to_string(format) + ", " + std::to_string(bits) + " bits)");
  }
  if (channels > 2) {
    throw Error(ErrorCode::kUnsupportedFormat, "only mono or stereo input is supported");
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t num_frames = data_size / frame_bytes;
  if (num_frames == 0) throw Error(ErrorCode::kEmptyAudio, path.string() + " holds no samples");

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  w.samples.resize(num_frames);
  for (std::size_t i = 0; i < num_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(p)) / 32768.0;
      } else {
        const float v = std::bit_cast<float>(read_u32(p));
        if (!std::isfinite(v)) throw Error(ErrorCode::kCorruptHeader, "non-finite float sample");
        acc += v;
      }
    }
    w.samples[i] = acc / channels;
  }
  return w;
}

void save_wav(const Waveform& waveform, const std::filesystem::path& path) {
  validate(waveform);
  const auto n = static_cast<std::uint32_t>(waveform.samples.size());
  const auto rate = static_cast<std::uint32_t>(waveform.sample_rate);
  std::vector<unsigned char> out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  put_tag(out, "RIFF");
  put_u32(out, 36 + 2 * n);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, 2 * n);
  for (double s : waveform.samples) {
    const double q = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::kIoFailure, "write failed for " + path.string());
}

Spectrogram stft(const Waveform& waveform, const FrameConfig& config) {
  validate(config);
  validate(waveform);
  if (waveform.size() < static_cast<std::size_t>(config.frame_length)) {
    throw Error(ErrorCode::kTooShort, "waveform shorter than one frame");
  }
  const std::vector<double> window = make_window(config);
  Spectrogram spec;
  spec.frame_config = config;
  spec.sample_rate = waveform.sample_rate;
  spec.num_frames = num_frames_for(waveform.size(), config);
  spec.num_bins = config.num_bins();
  spec.bins.resize(static_cast<std::size_t>(spec.num_frames) * spec.num_bins);

  std::vector<double> block(config.frame_length);
  for (int t = 0; t < spec.num_frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * config.hop_length;
    for (int i = 0; i < config.frame_length; ++i) {
      const std::size_t idx = start + i;
      block[i] = idx < waveform.size() ? waveform.samples[idx] * window[i] : 0.0;
    }
    const auto bins = rfft(block);
    std::copy(bins.begin(), bins.end(), spec.bins.begin() + static_cast<std::ptrdiff_t>(t) * spec.num_bins);
  }
  return spec;
}

Waveform istft(const Spectrogram& spec) {
  const FrameConfig& config = spec.frame_config;
  validate(config);
  if (spec.num_frames < 1 || spec.num_bins != config.num_bins() ||
      spec.bins.size() != static_cast<std::size_t>(spec.num_frames) * spec.num_bins) {
    throw Error(ErrorCode::kInvalidArgument, "spectrogram shape is inconsistent");
  }
  const std::vector<double> window = make_window(config);
  const std::size_t length =
      static_cast<std::size_t>(spec.num_frames - 1) * config.hop_length + config.frame_length;
  std::vector<double> acc(length, 0.0);
  std::vector<double> weight(length, 0.0);
  for (int t = 0; t < spec.num_frames; ++t) {
    const std::vector<double> frame = irfft(spec.frame(t), config.frame_length);
    const std::size_t start = static_cast<std::size_t>(t) * config.hop_length;
    for (int i = 0; i < config.frame_length; ++i) {
      acc[start + i] += frame[i];
      weight[start + i] += window[i];
    }
  }
  Waveform out;
  out.sample_rate = spec.sample_rate;
  out.samples.resize(length);
  constexpr double kMinWeight = 1e-8;
  for (std::size_t i = 0; i < length; ++i) {
    out.samples[i] = weight[i] > kMinWeight ? acc[i] / weight[i] : 0.0;
  }
  return out;
}

}  // namespace serforge
