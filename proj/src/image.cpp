// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/image.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>
#include <mutex>
#include <map>

#include "visynth/error.hpp"
#include "visynth/text.hpp"

namespace visynth {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const auto type_begin = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + type_begin, static_cast<uInt>(out.size() - type_begin));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> render_blank_png(int width, int height) {
  if (width <= 0 || height <= 0)
    throw Error(ErrorCode::InvalidArgument, "blank image dimensions must be positive");

  // Each scanline: filter byte 0 then RGB white.
  const std::size_t row = 1 + static_cast<std::size_t>(width) * 3;
  std::vector<std::uint8_t> raw(row * static_cast<std::size_t>(height), 0xFF);
  for (int y = 0; y < height; ++y) raw[row * static_cast<std::size_t>(y)] = 0;

  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw Error(ErrorCode::IoFailure, "zlib compression failed");
  packed.resize(packed_size);

  std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(width));
  put_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // depth 8, RGB, deflate, no filter, no interlace
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", {});
  return png;
}

std::string media_type_for_path(const std::filesystem::path& path) {
  const auto ext = text::to_lower_ascii(path.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".bmp") return "image/bmp";
  return "application/octet-stream";
}

ImagePayload materialize(const ImageRef& image, const std::filesystem::path& base_dir) {
  if (const auto* b = std::get_if<BlankImage>(&image.kind)) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::string> cache;
    std::lock_guard lock(mu);
    auto [it, inserted] = cache.try_emplace({b->width, b->height});
    if (inserted) it->second = text::base64_encode(render_blank_png(b->width, b->height));
    return {"image/png", it->second};
  }
  if (const auto* i = std::get_if<InlineImage>(&image.kind)) return {i->media_type, i->data};

  const auto& f = std::get<FileImage>(image.kind);
  std::filesystem::path path(f.path);
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileMissing, path.string(), "cannot read image " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return {media_type_for_path(path), text::base64_encode(bytes)};
}

}  // namespace visynth
