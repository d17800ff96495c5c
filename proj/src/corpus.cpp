// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "visynth/error.hpp"
#include "visynth/text.hpp"

namespace visynth {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& reason) {
  throw Error(ErrorCode::RecordInvalid, reason, reason);
}

std::string require_string(const json& j, const char* key) {
  if (!j.is_object()) invalid("record is not a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) invalid(std::string("missing field '") + key + "'");
  if (!it->is_string()) invalid(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) invalid(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

std::string_view role_name(Role r) { return r == Role::User ? "user" : "assistant"; }

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileMissing, path.string(), "cannot open " + path.string());
  return in;
}

template <class T, class Parse>
LoadResult<T> load_lines(const std::filesystem::path& path, std::optional<std::size_t> limit,
                         Parse parse) {
  auto in = open_input(path);
  LoadResult<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (limit && out.records.size() >= *limit) break;
    if (text::is_blank(line)) continue;
    try {
      const json j = json::parse(line);
      out.records.push_back(parse(j));
    } catch (const json::parse_error&) {
      out.rejects.push_back({lineno, "malformed JSON"});
    } catch (const json::exception& e) {
      out.rejects.push_back({lineno, e.what()});
    } catch (const Error& e) {
      out.rejects.push_back({lineno, e.what()});
    }
  }
  return out;
}

template <class T>
std::size_t write_records(std::span<const T> records, const std::filesystem::path& path) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.emplace_back(r);
  return write_json_lines(rows, path);
}

}  // namespace

// ---------------------------------------------------------------------------

ImageRef ImageRef::file(std::string path) { return {FileImage{std::move(path)}}; }
ImageRef ImageRef::blank(int width, int height) { return {BlankImage{width, height}}; }
ImageRef ImageRef::inline_data(std::string base64, std::string media_type) {
  return {InlineImage{std::move(base64), std::move(media_type)}};
}

void validate(const ImageRef& image) {
  if (const auto* f = std::get_if<FileImage>(&image.kind)) {
    if (f->path.empty()) invalid("image path is empty");
  } else if (const auto* b = std::get_if<BlankImage>(&image.kind)) {
    if (b->width <= 0 || b->height <= 0) invalid("blank image dimensions must be positive");
  } else if (const auto* i = std::get_if<InlineImage>(&image.kind)) {
    if (i->data.empty()) invalid("inline image payload is empty");
    if (i->media_type.empty()) invalid("inline image media type is empty");
  }
}

void validate(const ImageCaptionPair& pair) {
  if (pair.id.empty()) invalid("empty id");
  validate(pair.image);
  if (text::is_blank(pair.caption)) invalid("empty caption");
}

void validate(const TaskTriplet& triplet) {
  if (text::is_blank(triplet.instruction)) invalid("empty instruction");
  if (text::is_blank(triplet.informative_response)) invalid("empty informative response");
  if (text::is_blank(triplet.precise_response)) invalid("empty precise response");
}

void validate(const SeedRecord& record) {
  validate(record.pair);
  validate(record.triplet);
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::CaptionOnly: return "caption_only";
    case Provenance::CaptionPlusSynthetic: return "caption_plus_synthetic";
    case Provenance::SynthesizerTuning: return "synthesizer_tuning";
    case Provenance::Stage1: return "stage1";
    case Provenance::Stage2: return "stage2";
  }
  return "unknown";
}

Provenance provenance_from_string(std::string_view s) {
  for (auto p : {Provenance::CaptionOnly, Provenance::CaptionPlusSynthetic,
                 Provenance::SynthesizerTuning, Provenance::Stage1, Provenance::Stage2}) {
    if (to_string(p) == s) return p;
  }
  invalid("unknown provenance '" + std::string(s) + "'");
}

void validate(const TrainingExample& example) {
  const auto& turns = example.turns;
  if (turns.empty()) invalid("training example has no turns");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const Role expected = i % 2 == 0 ? Role::User : Role::Assistant;
    if (turns[i].role != expected) invalid("turns must alternate user/assistant starting with user");
    if (turns[i].image && turns[i].role != Role::User) invalid("image on a non-user turn");
    if (turns[i].image) validate(*turns[i].image);
  }
  std::size_t expected_turns = 2;
  switch (example.provenance) {
    case Provenance::CaptionPlusSynthetic: expected_turns = 4; break;
    case Provenance::SynthesizerTuning: expected_turns = 6; break;
    default: break;
  }
  if (turns.size() != expected_turns) {
    invalid("provenance " + std::string(to_string(example.provenance)) + " requires " +
            std::to_string(expected_turns) + " turns, got " + std::to_string(turns.size()));
  }
}

// ---------------------------------------------------------------------------

LossMaskedSequence::LossMaskedSequence(std::string rendered_text, std::vector<MaskSpan> spans,
                                       std::vector<ImageRef> image_refs)
    : text_(std::move(rendered_text)), spans_(std::move(spans)), images_(std::move(image_refs)) {
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < spans_.size(); ++i) {
    const auto& s = spans_[i];
    if (s.start >= s.end) throw Error(ErrorCode::InvalidMask, "mask span is empty or reversed");
    if (s.end > text_.size()) throw Error(ErrorCode::InvalidMask, "mask span exceeds text");
    if (i > 0 && s.start < prev_end)
      throw Error(ErrorCode::InvalidMask, "mask spans overlap or are unsorted");
    if (!text::is_char_boundary(text_, s.start) || !text::is_char_boundary(text_, s.end))
      throw Error(ErrorCode::InvalidMask, "mask span splits a UTF-8 character");
    prev_end = s.end;
  }
}

std::vector<std::string> LossMaskedSequence::masked_segments() const {
  std::vector<std::string> out;
  out.reserve(spans_.size());
  for (const auto& s : spans_) out.push_back(text_.substr(s.start, s.end - s.start));
  return out;
}

std::string LossMaskedSequence::masked_text() const {
  std::string out;
  for (const auto& s : spans_) out.append(text_, s.start, s.end - s.start);
  return out;
}

// ---------------------------------------------------------------------------

void to_json(json& j, const ImageRef& v) {
  if (const auto* f = std::get_if<FileImage>(&v.kind)) {
    j = {{"kind", "file"}, {"path", f->path}};
  } else if (const auto* b = std::get_if<BlankImage>(&v.kind)) {
    j = {{"kind", "blank"}, {"width", b->width}, {"height", b->height}};
  } else {
    const auto& i = std::get<InlineImage>(v.kind);
    j = {{"kind", "inline"}, {"media_type", i.media_type}, {"data", i.data}};
  }
}

void from_json(const json& j, ImageRef& v) {
  if (j.is_string()) {
    v = ImageRef::file(j.get<std::string>());
  } else {
    const auto kind = require_string(j, "kind");
    if (kind == "file") {
      v = ImageRef::file(require_string(j, "path"));
    } else if (kind == "blank") {
      if (!j.contains("width") || !j.contains("height") || !j["width"].is_number_integer() ||
          !j["height"].is_number_integer())
        invalid("blank image needs integer width and height");
      v = ImageRef::blank(j["width"].get<int>(), j["height"].get<int>());
    } else if (kind == "inline") {
      v = ImageRef::inline_data(require_string(j, "data"), require_string(j, "media_type"));
    } else {
      invalid("unknown image kind '" + kind + "'");
    }
  }
  validate(v);
}

void to_json(json& j, const ImageCaptionPair& v) {
  j = {{"id", v.id}, {"image", v.image}, {"caption", v.caption}};
  if (v.domain_tag) j["domain_tag"] = *v.domain_tag;
}

void from_json(const json& j, ImageCaptionPair& v) {
  v.id = require_string(j, "id");
  if (!j.contains("image")) invalid("missing field 'image'");
  v.image = j.at("image").get<ImageRef>();
  v.caption = require_string(j, "caption");
  v.domain_tag = optional_string(j, "domain_tag");
  validate(v);
}

void to_json(json& j, const TaskTriplet& v) {
  j = {{"instruction", v.instruction},
       {"informative_response", v.informative_response},
       {"precise_response", v.precise_response}};
}

void from_json(const json& j, TaskTriplet& v) {
  v.instruction = require_string(j, "instruction");
  v.informative_response = require_string(j, "informative_response");
  v.precise_response = require_string(j, "precise_response");
  validate(v);
}

void to_json(json& j, const SeedRecord& v) {
  j = {{"pair", v.pair}, {"triplet", v.triplet}};
  if (v.source_task_name) j["source_task_name"] = *v.source_task_name;
}

void from_json(const json& j, SeedRecord& v) {
  if (!j.is_object() || !j.contains("pair") || !j.contains("triplet"))
    invalid("seed record needs 'pair' and 'triplet'");
  v.pair = j.at("pair").get<ImageCaptionPair>();
  v.triplet = j.at("triplet").get<TaskTriplet>();
  v.source_task_name = optional_string(j, "source_task_name");
}

void to_json(json& j, const ChatTurn& v) {
  j = {{"role", role_name(v.role)}, {"text", v.text}};
  if (v.image) j["image"] = *v.image;
  j["loss_bearing"] = v.loss_bearing;
}

void from_json(const json& j, ChatTurn& v) {
  const auto role = require_string(j, "role");
  if (role == "user") {
    v.role = Role::User;
  } else if (role == "assistant") {
    v.role = Role::Assistant;
  } else {
    invalid("unknown role '" + role + "'");
  }
  v.text = require_string(j, "text");
  v.image.reset();
  if (j.contains("image") && !j["image"].is_null()) v.image = j["image"].get<ImageRef>();
  v.loss_bearing = j.value("loss_bearing", false);
}

void to_json(json& j, const TrainingExample& v) {
  j = {{"turns", v.turns},
       {"provenance", to_string(v.provenance)},
       {"source_pair_id", v.source_pair_id}};
}

void from_json(const json& j, TrainingExample& v) {
  if (!j.is_object() || !j.contains("turns") || !j["turns"].is_array())
    invalid("training example needs a 'turns' array");
  v.turns = j["turns"].get<std::vector<ChatTurn>>();
  v.provenance = provenance_from_string(require_string(j, "provenance"));
  v.source_pair_id = require_string(j, "source_pair_id");
  validate(v);
}

void to_json(json& j, const LossMaskedSequence& v) {
  json spans = json::array();
  for (const auto& s : v.mask_spans()) spans.push_back({s.start, s.end});
  j = {{"rendered_text", v.rendered_text()}, {"mask_spans", spans}, {"image_refs", v.image_refs()}};
}

LossMaskedSequence sequence_from_json(const json& j) {
  std::vector<MaskSpan> spans;
  for (const auto& s : j.at("mask_spans")) spans.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
  return LossMaskedSequence(j.at("rendered_text").get<std::string>(), std::move(spans),
                            j.at("image_refs").get<std::vector<ImageRef>>());
}

// ---------------------------------------------------------------------------

LoadResult<ImageCaptionPair> load_pairs(const std::filesystem::path& path,
                                        std::optional<std::size_t> limit) {
  std::unordered_set<std::string> seen;
  auto result = load_lines<ImageCaptionPair>(path, limit, [&](const json& j) {
    auto pair = j.get<ImageCaptionPair>();
    if (!seen.insert(pair.id).second) invalid("duplicate id '" + pair.id + "'");
    return pair;
  });
  return result;
}

LoadResult<SeedRecord> load_seed_records(const std::filesystem::path& path,
                                         std::optional<std::size_t> limit) {
  return load_lines<SeedRecord>(path, limit, [](const json& j) { return j.get<SeedRecord>(); });
}

LoadResult<TrainingExample> load_training_examples(const std::filesystem::path& path) {
  return load_lines<TrainingExample>(path, std::nullopt,
                                     [](const json& j) { return j.get<TrainingExample>(); });
}

LoadResult<json> load_json_lines(const std::filesystem::path& path, std::optional<std::size_t> limit) {
  return load_lines<json>(path, limit, [](const json& j) { return j; });
}

std::size_t write_json_lines(std::span<const json> rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, path.string(), "cannot write " + path.string());
  for (const auto& row : rows) out << row.dump(-1, ' ', false, json::error_handler_t::strict) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, path.string(), "write failed for " + path.string());
  return rows.size();
}

std::size_t write_jsonl(std::span<const TrainingExample> records, const std::filesystem::path& path) {
  return write_records(records, path);
}
std::size_t write_jsonl(std::span<const SeedRecord> records, const std::filesystem::path& path) {
  return write_records(records, path);
}
std::size_t write_jsonl(std::span<const ImageCaptionPair> records, const std::filesystem::path& path) {
  return write_records(records, path);
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, path.string(), "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::IoFailure, path.string(), "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace visynth
