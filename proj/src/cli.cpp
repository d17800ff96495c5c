// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/cli.hpp"

#include <cmath>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "visynth/assembler.hpp"
#include "visynth/backends.hpp"
#include "visynth/corpus.hpp"
#include "visynth/error.hpp"
#include "visynth/evalharness.hpp"
#include "visynth/filterkit.hpp"
#include "visynth/quality.hpp"
#include "visynth/seedkit.hpp"
#include "visynth/synthclient.hpp"

namespace visynth::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// File names inside the output directory.
constexpr const char* kSeeds = "seeds.jsonl";
constexpr const char* kSeedsAugmented = "seeds_augmented.jsonl";
constexpr const char* kSynthTuning = "synthesizer_tuning.jsonl";
constexpr const char* kOutcomes = "outcomes.jsonl";
constexpr const char* kKeptTasks = "kept_tasks.jsonl";
constexpr const char* kManifest = "manifest.json";

struct Overrides {
  std::optional<std::size_t> limit;
  std::optional<std::uint64_t> rng_seed;
  std::optional<std::size_t> max_in_flight;
  std::optional<double> fraction;
  std::optional<std::string> out_dir;
  std::string mode = "single";
  bool reuse_caption = false;
  std::string task;
};

/// Error carrying an exit code chosen at the throw site.
struct CommandFailure {
  int code;
  std::string message;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() ? base / path : path;
}

std::optional<fs::path> optional_path(const json& j, const char* key, const fs::path& base) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw Error(ErrorCode::ConfigInvalid, key, std::string("config field '") + key + "' must be a path");
  return resolve(base, j[key].get<std::string>());
}

const fs::path& require_file(const std::optional<fs::path>& p, const char* what) {
  if (!p) throw CommandFailure{kUsage, std::string("config does not set paths.") + what};
  if (!fs::exists(*p)) throw CommandFailure{kUsage, std::string(what) + " file not found: " + p->string()};
  return *p;
}

fs::path require_stage_file(const fs::path& dir, const char* name, const char* producer) {
  auto p = dir / name;
  if (!fs::exists(p))
    throw CommandFailure{kUsage, p.string() + " not found; run `" + std::string(producer) + "` first"};
  return p;
}

json read_json_file(const fs::path& p) {
  try {
    return json::parse(read_text_file(p));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, p.string(), "cannot parse " + p.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& p, const json& j) { write_text_file(p, j.dump(2) + "\n"); }

void update_manifest(const fs::path& dir, const std::string& section, const json& value) {
  const auto path = dir / kManifest;
  json manifest = fs::exists(path) ? read_json_file(path) : json::object();
  manifest[section] = value;
  write_json_file(path, manifest);
}

void write_rejects(const fs::path& path, const std::vector<Reject>& rejects, std::ostream& out) {
  if (rejects.empty()) {
    std::error_code ec;
    fs::remove(path, ec);
    return;
  }
  std::vector<json> rows;
  for (const auto& r : rejects) rows.push_back({{"line", r.line}, {"reason", r.reason}});
  write_json_lines(rows, path);
  out << "  rejects: " << rejects.size() << " (see " << path.filename().string() << ")\n";
}

template <class T>
std::vector<T> load_typed(const fs::path& path, std::vector<Reject>& rejects) {
  auto raw = load_json_lines(path);
  rejects = std::move(raw.rejects);
  std::vector<T> out;
  std::size_t i = 0;
  for (const auto& row : raw.records) {
    ++i;
    try {
      out.push_back(row.get<T>());
    } catch (const std::exception& e) {
      rejects.push_back({i, e.what()});
    }
  }
  return out;
}

struct BackendHandle {
  std::shared_ptr<ChatBackend> backend;
  int max_new_tokens = 1024;
  double temperature = 0.0;
};

BackendHandle make_backend(const PipelineConfig& cfg, const std::string& role) {
  const auto it = cfg.backends.find(role);
  if (it == cfg.backends.end()) throw CommandFailure{kUsage, "config has no backends." + role + " entry"};
  const json& j = it->second;
  const auto kind = j.value("kind", std::string("http"));
  BackendHandle h;
  h.max_new_tokens = j.value("max_new_tokens", 1024);
  h.temperature = j.value("temperature", 0.0);
  if (kind == "http") {
    auto bc = apply_environment(j.get<BackendConfig>());
    bc.image_base_dir = cfg.base_dir;
    validate(bc);
    h.backend = make_http_backend(bc);
  } else if (kind == "scripted" || kind == "replay") {
    const auto file = optional_path(j, kind == "scripted" ? "rules" : "file", cfg.base_dir);
    if (!file || !fs::exists(*file)) throw CommandFailure{kUsage, "backend " + role + ": rules/replay file not found"};
    MockOptions options;
    options.max_latency = std::chrono::microseconds(j.value("max_latency_us", 0));
    options.latency_seed = j.value("latency_seed", std::uint64_t{0});
    h.backend = scripted_mock(kind == "scripted" ? load_mock_rules(*file) : load_replay_rules(*file), options);
  } else {
    throw CommandFailure{kUsage, "backend " + role + ": unknown kind '" + kind + "'"};
  }
  if (const auto record = optional_path(j, "record", cfg.base_dir))
    h.backend = std::make_shared<ReplayRecorder>(h.backend, *record);
  return h;
}

CaptionQuestionPool pool_for(const PipelineConfig& cfg) {
  return cfg.caption_pool ? load_caption_pool(*cfg.caption_pool) : default_caption_pool();
}

std::vector<EvalTaskSpec> tasks_for(const PipelineConfig& cfg) {
  return cfg.eval_tasks ? load_eval_tasks(*cfg.eval_tasks) : builtin_eval_tasks();
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Commands

int augment_records(const PipelineConfig& cfg, std::vector<SeedRecord> seeds, double fraction, std::uint64_t seed,
                    std::ostream& out) {
  const auto result = apply_blank_augmentation(seeds, fraction, seed, {cfg.blank_width, cfg.blank_height});
  write_jsonl(std::span<const SeedRecord>(result.records), cfg.output_dir / kSeedsAugmented);

  RenderOptions ro{cfg.include_control_tokens};
  std::vector<json> rendered;
  rendered.reserve(result.records.size());
  for (const auto& r : result.records) {
    json row = render_synthesizer_tuning(r, cfg.chat_template, ro);
    row["source_pair_id"] = r.pair.id;
    rendered.push_back(std::move(row));
  }
  write_json_lines(rendered, cfg.output_dir / kSynthTuning);

  json section = {{"records", result.records.size()},
                  {"fraction", fraction},
                  {"rng_seed", seed},
                  {"replaced", result.replaced_indices.size()},
                  {"expected_replaced", replacement_count(result.records.size(), fraction)},
                  {"replaced_indices", result.replaced_indices}};
  update_manifest(cfg.output_dir, "augment", section);
  out << "augment: " << result.replaced_indices.size() << " of " << result.records.size()
      << " images replaced with blanks\n";
  return kOk;
}

int cmd_seed_build(const PipelineConfig& cfg, const Overrides& o, std::ostream& out) {
  const auto& task_path = require_file(cfg.task_source, "task_source");
  const auto& caption_path = require_file(cfg.caption_source, "caption_source");

  std::vector<Reject> task_rejects, caption_rejects;
  const auto tasks = load_typed<TaskSourceRecord>(task_path, task_rejects);
  const auto captions = load_typed<CaptionSourceRecord>(caption_path, caption_rejects);
  auto merged = merge_seed_sources(tasks, captions);

  write_jsonl(std::span<const SeedRecord>(merged.records), cfg.output_dir / kSeeds);
  write_json_file(cfg.output_dir / "seed_join_report.json", merged.report);
  out << "seed-build: matched " << merged.report.matched << ", unmatched task records " << merged.report.unmatched_a
      << ", unmatched caption records " << merged.report.unmatched_b << "\n";
  write_rejects(cfg.output_dir / "task_source.rejects.jsonl", task_rejects, out);
  write_rejects(cfg.output_dir / "caption_source.rejects.jsonl", caption_rejects, out);

  json section = {{"task_records", tasks.size()},
                  {"caption_records", captions.size()},
                  {"task_rejects", task_rejects.size()},
                  {"caption_rejects", caption_rejects.size()},
                  {"matched", merged.report.matched},
                  {"unmatched_a", merged.report.unmatched_a},
                  {"unmatched_b", merged.report.unmatched_b},
                  {"seeds", merged.records.size()}};
  update_manifest(cfg.output_dir, "seed_build", section);

  if (o.fraction) return augment_records(cfg, std::move(merged.records), *o.fraction, cfg.rng_seed, out);
  return kOk;
}

int cmd_augment(const PipelineConfig& cfg, const Overrides& o, std::ostream& out) {
  const auto path = require_stage_file(cfg.output_dir, kSeeds, "seed-build");
  auto loaded = load_seed_records(path, o.limit);
  write_rejects(cfg.output_dir / "seeds.rejects.jsonl", loaded.rejects, out);
  return augment_records(cfg, std::move(loaded.records), o.fraction.value_or(cfg.fraction), cfg.rng_seed, out);
}

int cmd_synthesize(const PipelineConfig& cfg, const Overrides& o, std::ostream& out) {
  const auto& pairs_path = require_file(cfg.pairs, "pairs");
  const auto loaded = load_pairs(pairs_path, o.limit);
  write_rejects(cfg.output_dir / "pairs.rejects.jsonl", loaded.rejects, out);

  auto handle = make_backend(cfg, "synthesizer");
  SynthesisOptions so{handle.max_new_tokens, handle.temperature};
  const auto outcomes = synthesize_batch(loaded.records, *handle.backend, cfg.max_in_flight, cfg.chat_template, so);

  std::vector<json> rows(outcomes.begin(), outcomes.end());
  write_json_lines(rows, cfg.output_dir / kOutcomes);
  const auto stats = summarize(outcomes);
  json section = stats;
  section["pairs"] = loaded.records.size();
  section["pair_rejects"] = loaded.rejects.size();
  write_json_file(cfg.output_dir / "synthesis_stats.json", stats);
  update_manifest(cfg.output_dir, "synthesize", section);

  out << "synthesize: " << stats.total << " outcomes, " << stats.triplets << " triplets, " << stats.parse_failures
      << " parse failures (rate " << fixed(stats.parse_failure_rate, 3) << "), " << stats.backend_failures
      << " backend failures\n";
  if (stats.total > 0 && stats.backend_failures == stats.total) {
    throw CommandFailure{kBackend, "every synthesis request failed at the backend"};
  }
  return kOk;
}

int cmd_filter(const PipelineConfig& cfg, const Overrides& o, std::ostream& out) {
  const auto path = require_stage_file(cfg.output_dir, kOutcomes, "synthesize");
  std::vector<Reject> rejects;
  auto outcomes = load_typed<SynthesisOutcome>(path, rejects);
  if (o.limit && outcomes.size() > *o.limit) outcomes.resize(*o.limit);
  write_rejects(cfg.output_dir / "outcomes.rejects.jsonl", rejects, out);

  std::vector<TaskTriplet> triplets;
  std::vector<std::string> ids;
  for (const auto& oc : outcomes) {
    if (const auto* t = std::get_if<TaskTriplet>(&oc.result)) {
      triplets.push_back(*t);
      ids.push_back(oc.pair_id);
    }
  }

  FilterOptions fo;
  if (cfg.judge_prompt) fo.prompt_template = read_text_file(*cfg.judge_prompt);
  FilterResult result;
  if (!triplets.empty()) {
    auto handle = make_backend(cfg, "judge");
    fo.max_new_tokens = handle.max_new_tokens;
    fo.temperature = handle.temperature;
    result = filter_triplets(triplets, *handle.backend, cfg.max_in_flight, fo);
  }

  std::vector<json> kept_rows;
  std::vector<json> label_rows;
  for (std::size_t i = 0; i < result.kept_indices.size(); ++i) {
    const auto idx = result.kept_indices[i];
    json row = assemble_cot(triplets[idx], cfg.cot_connective);
    row["pair_id"] = ids[idx];
    kept_rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    label_rows.push_back({{"pair_id", ids[i]},
                          {"label", result.labels[i] ? json(to_string(*result.labels[i])) : json("judge_failure")}});
  }
  write_json_lines(kept_rows, cfg.output_dir / kKeptTasks);
  write_json_lines(label_rows, cfg.output_dir / "filter_labels.jsonl");
  write_json_lines(std::vector<json>{json(result.stats)}, cfg.output_dir / "filter_stats.jsonl");
  const auto table = format_filter_stats_table(result.stats);
  write_text_file(cfg.output_dir / "filter_stats.txt", table);

  json section = result.stats;
  section["input_outcomes"] = outcomes.size();
  section["kept"] = kept_rows.size();
  update_manifest(cfg.output_dir, "filter", section);
  out << "filter: kept " << kept_rows.size() << " of " << result.stats.total << " (retention "
      << fixed(result.stats.retention_rate, 3) << ")\n"
      << table;
  if (result.stats.total > 0 && result.stats.judge_failures == result.stats.total)
    throw CommandFailure{kBackend, "every judge request failed"};
  return kOk;
}

int cmd_assemble(const PipelineConfig& cfg, const Overrides& o, std::ostream& out) {
  if (o.mode != "single" && o.mode != "two-stage") throw CommandFailure{kUsage, "--mode must be single or two-stage"};
  const auto& pairs_path = require_file(cfg.pairs, "pairs");
  const auto loaded = load_pairs(pairs_path, o.limit);
  write_rejects(cfg.output_dir / "pairs.rejects.jsonl", loaded.rejects, out);

  const auto kept_path = require_stage_file(cfg.output_dir, kKeptTasks, "filter");
  std::vector<Reject> rejects;
  const auto rows = load_typed<json>(kept_path, rejects);
  TaskMap tasks;
  for (const auto& row : rows) {
    const auto id = row.at("pair_id").get<std::string>();
    if (!tasks.emplace(id, row.get<CotTask>()).second)
      throw Error(ErrorCode::DuplicateId, id, "two kept tasks for pair '" + id + "'");
  }
  std::set<std::string> pair_ids;
  for (const auto& p : loaded.records) pair_ids.insert(p.id);
  std::size_t tasks_matched = 0;
  for (const auto& [id, _] : tasks) tasks_matched += pair_ids.count(id);

  const auto pool = pool_for(cfg);
  const RenderOptions ro{cfg.include_control_tokens};
  auto emit = [&](const std::vector<TrainingExample>& examples, const std::string& stem) {
    write_jsonl(std::span<const TrainingExample>(examples), cfg.output_dir / (stem + ".jsonl"));
    std::vector<json> rendered;
    rendered.reserve(examples.size());
    for (const auto& ex : examples) {
      json r = render_training_sequence(ex, cfg.chat_template, ro);
      r["source_pair_id"] = ex.source_pair_id;
      r["provenance"] = to_string(ex.provenance);
      rendered.push_back(std::move(r));
    }
    write_json_lines(rendered, cfg.output_dir / (stem + ".rendered.jsonl"));
  };

  json section = {{"mode", o.mode},
                  {"pairs", loaded.records.size()},
                  {"tasks", tasks.size()},
                  {"tasks_matched", tasks_matched},
                  {"rng_seed", cfg.rng_seed},
                  {"pool_hash", pool.hash()}};
  if (o.mode == "single") {
    const auto examples = build_single_stage_dataset(loaded.records, tasks, pool, cfg.rng_seed);
    emit(examples, "train_single");
    const auto manifest = make_manifest(examples, loaded.records.size(), tasks.size(), cfg.rng_seed, pool);
    write_json_file(cfg.output_dir / "train_single.manifest.json", manifest);
    std::size_t four = 0, two = 0;
    for (const auto& ex : examples) (ex.turns.size() == 4 ? four : two) += 1;
    section["examples"] = examples.size();
    section["four_turn"] = four;
    section["two_turn"] = two;
    section["counts_by_provenance"] = manifest.counts_by_provenance;
    out << "assemble (single): " << examples.size() << " examples, " << four << " with a synthetic task\n";
  } else {
    const auto ds = build_two_stage(loaded.records, tasks, pool, cfg.rng_seed, {o.reuse_caption});
    emit(ds.stage1, "train_stage1");
    emit(ds.stage2, "train_stage2");
    write_json_file(cfg.output_dir / "train_stage1.manifest.json",
                    make_manifest(ds.stage1, loaded.records.size(), tasks.size(), cfg.rng_seed, pool));
    write_json_file(cfg.output_dir / "train_stage2.manifest.json",
                    make_manifest(ds.stage2, loaded.records.size(), tasks.size(), cfg.rng_seed, pool));
    section["reuse_caption"] = o.reuse_caption;
    section["stage1"] = ds.stage1.size();
    section["stage2"] = ds.stage2.size();
    out << "assemble (two-stage" << (o.reuse_caption ? ", reuse caption" : "") << "): stage1 " << ds.stage1.size()
        << ", stage2 " << ds.stage2.size() << "\n";
  }
  update_manifest(cfg.output_dir, "assemble", section);
  return kOk;
}

int cmd_evaluate(const PipelineConfig& cfg, const Overrides& o, std::ostream& out) {
  const auto tasks = tasks_for(cfg);
  if (o.task.empty()) throw CommandFailure{kUsage, "--task is required"};
  const EvalTaskSpec* spec = nullptr;
  try {
    spec = &find_task(tasks, o.task);
  } catch (const Error& e) {
    throw CommandFailure{kUsage, e.what()};
  }
  const auto it = cfg.eval_instances.find(o.task);
  if (it == cfg.eval_instances.end()) throw CommandFailure{kUsage, "config has no paths.eval_instances." + o.task};
  if (!fs::exists(it->second)) throw CommandFailure{kUsage, "instances file not found: " + it->second.string()};
  const auto loaded = load_eval_instances(it->second, o.limit);
  write_rejects(cfg.output_dir / ("eval_" + o.task + ".rejects.jsonl"), loaded.rejects, out);

  auto handle = make_backend(cfg, "eval");
  const auto report =
      run_eval(*spec, loaded.records, *handle.backend, cfg.max_in_flight, {handle.max_new_tokens, handle.temperature});
  std::vector<json> rows(report.per_instance.begin(), report.per_instance.end());
  write_json_lines(rows, cfg.output_dir / ("eval_" + o.task + ".jsonl"));
  write_json_file(cfg.output_dir / ("eval_" + o.task + ".json"), report);
  const auto table = format_score_table(std::span<const ScoreReport>(&report, 1));
  write_text_file(cfg.output_dir / ("eval_" + o.task + ".txt"), table);

  const auto manifest_path = cfg.output_dir / kManifest;
  json manifest = fs::exists(manifest_path) ? read_json_file(manifest_path) : json::object();
  manifest["evaluate"][o.task] = {{"instances", loaded.records.size()},
                                  {"n", report.n},
                                  {"mean_score", report.mean_score},
                                  {"failures", report.failures}};
  write_json_file(manifest_path, manifest);
  out << table;
  if (report.n > 0 && report.failures == report.n) throw CommandFailure{kBackend, "every evaluation request failed"};
  return kOk;
}

int cmd_stats(const PipelineConfig& cfg, const Overrides&, std::ostream& out) {
  json report = json::object();
  std::string text;
  if (cfg.annotations) {
    std::vector<Reject> rejects;
    const auto annotations = load_typed<QualityAnnotation>(require_file(cfg.annotations, "annotations"), rejects);
    write_rejects(cfg.output_dir / "annotations.rejects.jsonl", rejects, out);
    const auto summary = summarize_quality(annotations);
    const auto hist = task_type_distribution(annotations);
    report["quality"] = summary;
    report["task_type_distribution"] = hist;
    const std::vector<std::pair<std::string, QualitySummary>> rows = {{"synthetic", summary}};
    text += format_quality_table(rows) + "\n";
  }
  if (cfg.filter_annotations_pre || cfg.filter_annotations_post) {
    std::vector<Reject> r1, r2;
    const auto pre = load_typed<FilterAnnotation>(require_file(cfg.filter_annotations_pre, "filter_annotations_pre"), r1);
    const auto post = load_typed<FilterAnnotation>(require_file(cfg.filter_annotations_post, "filter_annotations_post"), r2);
    const auto fq = filter_quality_report(pre, post);
    report["filter_quality"] = fq;
    const std::vector<std::pair<std::string, FilterQualityReport>> rows = {{"annotated", fq}};
    text += format_filter_quality_table(rows) + "\n";
  }
  if (const auto m = cfg.output_dir / kManifest; fs::exists(m)) {
    const auto manifest = read_json_file(m);
    const auto violations = manifest_violations(manifest);
    report["manifest_violations"] = violations;
    text += "manifest: " + std::to_string(violations.size()) + " conservation violation(s)\n";
    for (const auto& v : violations) text += "  " + v + "\n";
  }
  if (report.empty()) throw CommandFailure{kUsage, "nothing to report: set paths.annotations or run the pipeline first"};
  write_json_file(cfg.output_dir / "stats.json", report);
  write_text_file(cfg.output_dir / "stats.txt", text);
  out << text;
  return kOk;
}

int cmd_golden(const PipelineConfig& cfg, const Overrides&, std::ostream& out) {
  for (const auto& [name, content] : golden_files(cfg.chat_template)) {
    write_text_file(cfg.output_dir / "golden" / name, content);
    out << "golden: wrote " << (cfg.output_dir / "golden" / name).string() << "\n";
  }
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::TemplateInvalid:
    case ErrorCode::FileMissing:
    case ErrorCode::InvalidArgument:
    case ErrorCode::FractionOutOfRange:
    case ErrorCode::EmptyPool:
    case ErrorCode::MissingPlaceholder:
      return kUsage;
    case ErrorCode::Timeout:
    case ErrorCode::HttpStatus:
    case ErrorCode::MalformedResponse:
    case ErrorCode::RetriesExhausted:
    case ErrorCode::ConnectionFailed:
    case ErrorCode::NoRuleMatched:
      return kBackend;
    default:
      return kData;
  }
}

}  // namespace

std::map<std::string, std::string> golden_files(const ChatTemplate& tmpl) {
  SeedRecord record{{"golden", ImageRef::file("image.png"), "{Caption}", std::nullopt},
                    {"{Instruction}", "{Informative Response}", "{Precise Response}"},
                    std::nullopt};
  const auto seq = render_synthesizer_tuning(record, tmpl);
  std::string marked;
  std::size_t pos = 0;
  for (const auto& s : seq.mask_spans()) {
    marked += seq.rendered_text().substr(pos, s.start - pos);
    marked += "<<" + seq.rendered_text().substr(s.start, s.end - s.start) + ">>";
    pos = s.end;
  }
  marked += seq.rendered_text().substr(pos);

  std::string templates;
  for (const auto& t : builtin_eval_tasks()) {
    templates += "### " + t.name + " [" + std::string(to_string(t.metric)) + "]\n" + t.prompt_template + "\n\n";
  }
  return {{"synthesizer_tuning.txt", seq.rendered_text()},
          {"synthesizer_tuning.mask.txt", marked},
          {"eval_templates.txt", templates}};
}

PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::FileMissing, path.string(), "config file not found: " + path.string());
  PipelineConfig cfg;
  cfg.base_dir = fs::absolute(path).parent_path();
  cfg.raw = read_json_file(path);
  const json& j = cfg.raw;
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "config must be a JSON object");
  try {
    if (!j.contains("template")) {
      cfg.chat_template = plain_template();
    } else if (j["template"].is_string()) {
      const auto p = resolve(cfg.base_dir, j["template"].get<std::string>());
      if (!fs::exists(p)) throw Error(ErrorCode::FileMissing, p.string(), "template file not found: " + p.string());
      cfg.chat_template = load_template(p);
    } else {
      cfg.chat_template = j["template"].get<ChatTemplate>();
    }
    cfg.caption_pool = optional_path(j, "caption_pool", cfg.base_dir);
    cfg.judge_prompt = optional_path(j, "judge_prompt", cfg.base_dir);
    cfg.cot_connective = j.value("cot_connective", kDefaultCotConnective);

    const json paths = j.value("paths", json::object());
    cfg.pairs = optional_path(paths, "pairs", cfg.base_dir);
    cfg.task_source = optional_path(paths, "task_source", cfg.base_dir);
    cfg.caption_source = optional_path(paths, "caption_source", cfg.base_dir);
    cfg.eval_tasks = optional_path(paths, "eval_tasks", cfg.base_dir);
    cfg.annotations = optional_path(paths, "annotations", cfg.base_dir);
    cfg.filter_annotations_pre = optional_path(paths, "filter_annotations_pre", cfg.base_dir);
    cfg.filter_annotations_post = optional_path(paths, "filter_annotations_post", cfg.base_dir);
    cfg.output_dir = resolve(cfg.base_dir, paths.value("output_dir", std::string("out")));
    const json instances = paths.value("eval_instances", json::object());
    for (const auto& [name, p] : instances.items()) cfg.eval_instances[name] = resolve(cfg.base_dir, p.get<std::string>());

    const json backends = j.value("backends", json::object());
    for (const auto& [role, b] : backends.items()) cfg.backends[role] = b;

    cfg.rng_seed = j.value("rng_seed", std::uint64_t{0});
    cfg.fraction = j.value("fraction", 0.1);
    if (j.contains("blank_size")) {
      cfg.blank_width = j["blank_size"].at(0).get<int>();
      cfg.blank_height = j["blank_size"].at(1).get<int>();
    }
    cfg.max_in_flight = j.value("max_in_flight", std::size_t{8});
    cfg.include_control_tokens = j.value("include_control_tokens", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string(), "bad config: " + std::string(e.what()));
  }

  for (const auto& p : {cfg.caption_pool, cfg.judge_prompt, cfg.eval_tasks}) {
    if (p && !fs::exists(*p)) throw Error(ErrorCode::FileMissing, p->string(), "referenced file not found: " + p->string());
  }
  if (!(cfg.fraction >= 0.0 && cfg.fraction <= 1.0))
    throw Error(ErrorCode::FractionOutOfRange, "fraction must lie in [0, 1]");
  if (cfg.max_in_flight < 1) throw Error(ErrorCode::ConfigInvalid, "max_in_flight must be >= 1");
  if (cfg.blank_width <= 0 || cfg.blank_height <= 0) throw Error(ErrorCode::ConfigInvalid, "blank_size must be positive");
  return cfg;
}

std::vector<std::string> manifest_violations(const json& m) {
  std::vector<std::string> v;
  auto num = [](const json& section, const char* key) -> std::int64_t {
    return section.contains(key) ? section[key].get<std::int64_t>() : -1;
  };
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) v.push_back(what);
  };

  if (m.contains("seed_build")) {
    const auto& s = m["seed_build"];
    expect(num(s, "matched") + num(s, "unmatched_a") == num(s, "task_records"),
           "seed_build: matched + unmatched_a != task_records");
    expect(num(s, "matched") + num(s, "unmatched_b") == num(s, "caption_records"),
           "seed_build: matched + unmatched_b != caption_records");
    expect(num(s, "seeds") == num(s, "matched"), "seed_build: seeds != matched");
  }
  if (m.contains("augment")) {
    const auto& s = m["augment"];
    expect(num(s, "replaced") == num(s, "expected_replaced"), "augment: replaced != round(fraction * records)");
    if (m.contains("seed_build"))
      expect(num(s, "records") <= num(m["seed_build"], "seeds"), "augment: more records than seeds");
  }
  if (m.contains("synthesize")) {
    const auto& s = m["synthesize"];
    expect(num(s, "total") == num(s, "pairs"), "synthesize: outcomes != pairs");
    expect(num(s, "triplets") + num(s, "parse_failures") + num(s, "backend_failures") == num(s, "total"),
           "synthesize: outcome classes do not sum to total");
  }
  if (m.contains("filter")) {
    const auto& s = m["filter"];
    expect(num(s, "consistent") + num(s, "inconsistent") + num(s, "open") + num(s, "judge_failures") == num(s, "total"),
           "filter: label classes do not sum to total");
    expect(num(s, "kept") == num(s, "consistent"), "filter: kept != consistent");
    const auto total = num(s, "total");
    const double expected_rate = total > 0 ? static_cast<double>(num(s, "consistent")) / static_cast<double>(total) : 0.0;
    expect(std::abs(s.value("retention_rate", -1.0) - expected_rate) < 1e-12, "filter: retention_rate != consistent / total");
    if (m.contains("synthesize"))
      expect(total == num(m["synthesize"], "triplets"), "filter: total != synthesized triplets");
  }
  if (m.contains("assemble")) {
    const auto& s = m["assemble"];
    if (m.contains("filter")) expect(num(s, "tasks") == num(m["filter"], "kept"), "assemble: tasks != filter kept");
    if (m.contains("synthesize")) expect(num(s, "pairs") == num(m["synthesize"], "pairs"), "assemble: pairs != synthesized pairs");
    if (s.value("mode", std::string{}) == "single") {
      expect(num(s, "examples") == num(s, "pairs"), "assemble: examples != pairs");
      expect(num(s, "four_turn") == num(s, "tasks_matched"), "assemble: four-turn examples != matched tasks");
      expect(num(s, "four_turn") + num(s, "two_turn") == num(s, "examples"), "assemble: turn classes do not sum");
    } else {
      expect(num(s, "stage1") == num(s, "pairs"), "assemble: stage1 != pairs");
      const auto extra = s.value("reuse_caption", false) ? num(s, "pairs") : 0;
      expect(num(s, "stage2") == num(s, "tasks_matched") + extra, "assemble: stage2 size mismatch");
    }
  }
  if (m.contains("evaluate")) {
    for (const auto& [task, s] : m["evaluate"].items()) {
      expect(num(s, "n") == num(s, "instances"), "evaluate." + task + ": n != instances");
      const double score = s.value("mean_score", -1.0);
      expect(score >= 0.0 && score <= 100.0, "evaluate." + task + ": mean_score outside [0, 100]");
    }
  }
  return v;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Domain visual-instruction synthesis, filtering, assembly and evaluation", "visynth"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides o;

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const PipelineConfig&, const Overrides&, std::ostream&);
  };
  const Command commands[] = {
      {"seed-build", "Join task and caption sources into seed records", cmd_seed_build},
      {"augment", "Replace a fraction of seed images with blanks and render tuning sequences", cmd_augment},
      {"synthesize", "Generate task triplets from image-caption pairs", cmd_synthesize},
      {"filter", "Keep consistent triplets and assemble CoT responses", cmd_filter},
      {"assemble", "Build single-stage or two-stage training data", cmd_assemble},
      {"evaluate", "Zero-shot evaluation of a backend on one task", cmd_evaluate},
      {"stats", "Quality, filter-quality and manifest reports", cmd_stats},
      {"golden", "Write golden renderings of the fixed formats", cmd_golden},
  };

  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "Pipeline config (JSON)")->required();
    sub->add_option("--limit", o.limit, "Process only the first N records");
    sub->add_option("--rng-seed", o.rng_seed, "Override the config RNG seed");
    sub->add_option("--max-in-flight", o.max_in_flight, "Concurrent backend calls")->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", o.out_dir, "Override paths.output_dir");
    if (std::string_view(c.name) == "seed-build" || std::string_view(c.name) == "augment")
      sub->add_option("--fraction", o.fraction, "Blank-image fraction in [0, 1]");
    if (std::string_view(c.name) == "assemble") {
      sub->add_option("--mode", o.mode, "single | two-stage")->check(CLI::IsMember({"single", "two-stage"}));
      sub->add_flag("--reuse-caption", o.reuse_caption, "Two-stage: copy caption examples into stage 2");
    }
    if (std::string_view(c.name) == "evaluate") sub->add_option("--task", o.task, "Task name")->required();
    subs.emplace_back(sub, &c);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  const Command* chosen = nullptr;
  for (const auto& [sub, cmd] : subs) {
    if (sub->parsed()) chosen = cmd;
  }
  try {
    auto cfg = load_config(config_path);
    if (o.rng_seed) cfg.rng_seed = *o.rng_seed;
    if (o.max_in_flight) cfg.max_in_flight = *o.max_in_flight;
    if (o.out_dir) cfg.output_dir = fs::path(*o.out_dir);
    if (o.fraction && !(*o.fraction >= 0.0 && *o.fraction <= 1.0)) {
      err << "error: --fraction must lie in [0, 1]\n";
      return kUsage;
    }
    fs::create_directories(cfg.output_dir);
    return chosen->fn(cfg, o, out);
  } catch (const CommandFailure& f) {
    err << "error: " << f.message << "\n";
    return f.code;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kBackend;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace visynth::cli
