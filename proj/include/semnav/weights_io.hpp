#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "semnav/binio.hpp"
#include "semnav/common.hpp"
#include "semnav/net.hpp"

// Weight file format, version 1 (little-endian):
//   char[4]  magic "IMGW"
//   u32      version
//   u32      input_size, u32 in_channels          -- architecture fingerprint
//   u32      stage count, u32[count] stage channels
//   u32      tensor count
//   per tensor: u32 name length, name bytes, u32 ndim, u32[ndim] dims
//   f32[]    all tensor values, in table order
//   u32      CRC-32 of the payload bytes
//
// The loader rebuilds the canonical tensor table from the fingerprint and
// requires an exact match, so a file can only be loaded into the
// architecture it was saved from.

namespace semnav {

namespace detail {

inline constexpr char kWeightsMagic[4] = {'I', 'M', 'G', 'W'};
inline constexpr std::uint32_t kWeightsVersion = 1;

}  // namespace detail

inline void save_weights(const NetWeights<float>& w, std::ostream& out) {
  out.write(detail::kWeightsMagic, 4);
  detail::write_pod(out, detail::kWeightsVersion);
  detail::write_pod(out, static_cast<std::uint32_t>(w.plan.input_size));
  detail::write_pod(out, static_cast<std::uint32_t>(w.plan.in_channels));
  detail::write_pod(out, static_cast<std::uint32_t>(w.plan.stages()));
  for (int c : w.plan.stage_channels)
    detail::write_pod(out, static_cast<std::uint32_t>(c));
  detail::write_pod(out, static_cast<std::uint32_t>(w.tensors.size()));
  for (const auto& t : w.tensors) {
    detail::write_pod(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    detail::write_pod(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) detail::write_pod(out, static_cast<std::uint32_t>(d));
  }
  std::uint32_t crc = 0;
  for (const auto& t : w.tensors) {
    const auto bytes = t.size() * sizeof(float);
    out.write(reinterpret_cast<const char*>(t.v.data()),
              static_cast<std::streamsize>(bytes));
    crc = detail::crc32(t.v.data(), bytes, crc);
  }
  detail::write_pod(out, crc);
  if (!out) throw IoError("failed while writing weights");
}

inline void save_weights(const NetWeights<float>& w, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  save_weights(w, out);
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline NetWeights<float> load_weights(std::istream& in) {
  char magic[4];
  detail::read_exact(in, magic, 4, "magic");
  if (std::string_view(magic, 4) != std::string_view(detail::kWeightsMagic, 4))
    throw FormatError("not a weights file: bad magic");
  const auto version = detail::read_pod<std::uint32_t>(in, "version");
  if (version != detail::kWeightsVersion)
    throw FormatError("unsupported weights version " + std::to_string(version));
  UnetPlan plan;
  plan.input_size =
      static_cast<int>(detail::read_pod<std::uint32_t>(in, "input size"));
  plan.in_channels =
      static_cast<int>(detail::read_pod<std::uint32_t>(in, "input channels"));
  const auto n_stages = detail::read_pod<std::uint32_t>(in, "stage count");
  if (n_stages < 2 || n_stages > 16)
    throw FormatError("implausible stage count " + std::to_string(n_stages));
  plan.stage_channels.clear();
  for (std::uint32_t i = 0; i < n_stages; ++i)
    plan.stage_channels.push_back(
        static_cast<int>(detail::read_pod<std::uint32_t>(in, "stage channels")));
  NetWeights<float> w;
  try {
    w = make_weights<float>(plan);
  } catch (const DomainError& e) {
    throw FormatError(std::string("invalid architecture fingerprint: ") +
                      e.what());
  }
  const auto n_tensors = detail::read_pod<std::uint32_t>(in, "tensor count");
  if (n_tensors != w.tensors.size())
    throw FormatError("tensor table size " + std::to_string(n_tensors) +
                      " does not match the fingerprint (expected " +
                      std::to_string(w.tensors.size()) + ")");
  for (auto& t : w.tensors) {
    const auto name_len = detail::read_pod<std::uint32_t>(in, "tensor name");
    if (name_len > 256) throw FormatError("implausible tensor name length");
    std::string name(name_len, '\0');
    detail::read_exact(in, name.data(), name_len, "tensor name");
    if (name != t.name)
      throw FormatError("tensor table mismatch: expected '" + t.name +
                        "', found '" + name + "'");
    const auto ndim = detail::read_pod<std::uint32_t>(in, "tensor rank");
    if (ndim != t.shape.size())
      throw FormatError("tensor '" + name + "' has wrong rank");
    for (std::size_t i = 0; i < t.shape.size(); ++i) {
      const auto d = detail::read_pod<std::uint32_t>(in, "tensor dim");
      if (static_cast<int>(d) != t.shape[i])
        throw FormatError("tensor '" + name + "' has wrong shape");
    }
  }
  std::uint32_t crc = 0;
  for (auto& t : w.tensors) {
    const auto bytes = t.size() * sizeof(float);
    detail::read_exact(in, t.v.data(), bytes, "tensor values");
    crc = detail::crc32(t.v.data(), bytes, crc);
  }
  const auto stored = detail::read_pod<std::uint32_t>(in, "checksum");
  if (stored != crc)
    throw FormatError("weights payload checksum mismatch: file is corrupt");
  return w;
}

inline NetWeights<float> load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return load_weights(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

// Loads and additionally requires the file's architecture to match `expected`
// (e.g. rejects a narrow-input weight file when the wide model is wanted).
inline NetWeights<float> load_weights(const std::string& path,
                                      const UnetPlan& expected) {
  NetWeights<float> w = load_weights(path);
  if (!(w.plan == expected))
    throw FormatError(path +
                      ": architecture fingerprint mismatch: file has input "
                      "size " +
                      std::to_string(w.plan.input_size) + ", expected " +
                      std::to_string(expected.input_size));
  return w;
}

}  // namespace semnav
