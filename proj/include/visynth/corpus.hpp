// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace visynth {

// ---------------------------------------------------------------------------
// Images

struct FileImage {
  std::string path;
  bool operator==(const FileImage&) const = default;
};

/// An all-white placeholder image. Rendering is deterministic in (width, height).
struct BlankImage {
  int width = 0;
  int height = 0;
  bool operator==(const BlankImage&) const = default;
};

struct InlineImage {
  std::string data;  // base64
  std::string media_type;
  bool operator==(const InlineImage&) const = default;
};

struct ImageRef {
  std::variant<FileImage, BlankImage, InlineImage> kind;

  static ImageRef file(std::string path);
  static ImageRef blank(int width, int height);
  static ImageRef inline_data(std::string base64, std::string media_type);

  bool is_blank() const { return std::holds_alternative<BlankImage>(kind); }
  bool operator==(const ImageRef&) const = default;
};

void validate(const ImageRef& image);

// ---------------------------------------------------------------------------
// Records

struct ImageCaptionPair {
  std::string id;
  ImageRef image;
  std::string caption;
  std::optional<std::string> domain_tag;
  bool operator==(const ImageCaptionPair&) const = default;
};

struct TaskTriplet {
  std::string instruction;
  std::string informative_response;
  std::string precise_response;
  bool operator==(const TaskTriplet&) const = default;
};

struct SeedRecord {
  ImageCaptionPair pair;
  TaskTriplet triplet;
  std::optional<std::string> source_task_name;
  bool operator==(const SeedRecord&) const = default;
};

void validate(const ImageCaptionPair& pair);
void validate(const TaskTriplet& triplet);
void validate(const SeedRecord& record);

enum class Role { User, Assistant };

struct ChatTurn {
  Role role = Role::User;
  std::string text;
  std::optional<ImageRef> image;
  bool loss_bearing = false;
  bool operator==(const ChatTurn&) const = default;
};

enum class Provenance { CaptionOnly, CaptionPlusSynthetic, SynthesizerTuning, Stage1, Stage2 };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct TrainingExample {
  std::vector<ChatTurn> turns;
  Provenance provenance = Provenance::CaptionOnly;
  std::string source_pair_id;
  bool operator==(const TrainingExample&) const = default;
};

/// Turns alternate User/Assistant starting with User, images only on User
/// turns, and the turn count matches the provenance.
void validate(const TrainingExample& example);

// ---------------------------------------------------------------------------
// Loss-masked sequences

/// Half-open byte interval [start, end) into a rendered text.
struct MaskSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const MaskSpan&) const = default;
};

/// Rendered conversation text with the byte spans that carry training loss.
/// Spans are checked on construction: non-empty, sorted, non-overlapping,
/// inside the text and on UTF-8 character boundaries.
class LossMaskedSequence {
 public:
  LossMaskedSequence(std::string rendered_text, std::vector<MaskSpan> spans,
                     std::vector<ImageRef> image_refs = {});

  const std::string& rendered_text() const { return text_; }
  const std::vector<MaskSpan>& mask_spans() const { return spans_; }
  const std::vector<ImageRef>& image_refs() const { return images_; }

  /// Concatenation of the text under every span, in order.
  std::string masked_text() const;
  std::vector<std::string> masked_segments() const;

  bool operator==(const LossMaskedSequence&) const = default;

 private:
  std::string text_;
  std::vector<MaskSpan> spans_;
  std::vector<ImageRef> images_;
};

// ---------------------------------------------------------------------------
// JSON schema

void to_json(nlohmann::json& j, const ImageRef& v);
void from_json(const nlohmann::json& j, ImageRef& v);
void to_json(nlohmann::json& j, const ImageCaptionPair& v);
void from_json(const nlohmann::json& j, ImageCaptionPair& v);
void to_json(nlohmann::json& j, const TaskTriplet& v);
void from_json(const nlohmann::json& j, TaskTriplet& v);
void to_json(nlohmann::json& j, const SeedRecord& v);
void from_json(const nlohmann::json& j, SeedRecord& v);
void to_json(nlohmann::json& j, const ChatTurn& v);
void from_json(const nlohmann::json& j, ChatTurn& v);
void to_json(nlohmann::json& j, const TrainingExample& v);
void from_json(const nlohmann::json& j, TrainingExample& v);
void to_json(nlohmann::json& j, const LossMaskedSequence& v);
LossMaskedSequence sequence_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// JSONL ingestion / emission

struct Reject {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

template <class T>
struct LoadResult {
  std::vector<T> records;
  std::vector<Reject> rejects;
};

/// Reads validated image-caption pairs in file order. Malformed lines and
/// duplicate ids land in `rejects`. Throws FileMissing.
LoadResult<ImageCaptionPair> load_pairs(const std::filesystem::path& path,
                                        std::optional<std::size_t> limit = std::nullopt);

LoadResult<SeedRecord> load_seed_records(const std::filesystem::path& path,
                                         std::optional<std::size_t> limit = std::nullopt);

LoadResult<TrainingExample> load_training_examples(const std::filesystem::path& path);

/// Raw JSON objects, one per non-empty line. Lines that fail to parse are rejects.
LoadResult<nlohmann::json> load_json_lines(const std::filesystem::path& path,
                                           std::optional<std::size_t> limit = std::nullopt);

/// Writes one compact JSON object per line. Throws IoFailure.
std::size_t write_json_lines(std::span<const nlohmann::json> rows, const std::filesystem::path& path);
std::size_t write_jsonl(std::span<const TrainingExample> records, const std::filesystem::path& path);
std::size_t write_jsonl(std::span<const SeedRecord> records, const std::filesystem::path& path);
std::size_t write_jsonl(std::span<const ImageCaptionPair> records, const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace visynth
