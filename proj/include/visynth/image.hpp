// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "visynth/corpus.hpp"

namespace visynth {

/// Base64 image bytes plus media type, as sent to a backend.
struct ImagePayload {
  std::string media_type;
  std::string base64;

  std::string data_url() const { return "data:" + media_type + ";base64," + base64; }
  bool operator==(const ImagePayload&) const = default;
};

/// Encodes a white 8-bit RGB PNG of the given size. Byte-identical for equal sizes.
std::vector<std::uint8_t> render_blank_png(int width, int height);

/// Resolves an image reference into an inline payload. Relative file paths are
/// resolved against `base_dir`. Throws FileMissing for unreadable files.
ImagePayload materialize(const ImageRef& image, const std::filesystem::path& base_dir = {});

std::string media_type_for_path(const std::filesystem::path& path);

}  // namespace visynth
