// Copyright (C) 2026 The visynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "visynth/evalharness.hpp"

#include <iomanip>
#include <numeric>
#include <sstream>

#include "visynth/error.hpp"
#include "visynth/metrics.hpp"
#include "visynth/parallel.hpp"
#include "visynth/text.hpp"

namespace visynth {
namespace {

std::string render_options(const EvalTaskSpec& spec, const std::vector<std::string>& options) {
  std::string out;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i) out += ", ";
    if (spec.option_style == OptionStyle::Lettered) {
      out += static_cast<char>('A' + static_cast<int>(i % 26));
      out += ": ";
    }
    out += options[i];
  }
  return out;
}

const std::string& first_gold(const EvalInstance& instance) {
  if (instance.gold.empty()) throw Error(ErrorCode::RecordInvalid, instance.id, "instance has no gold answer");
  return instance.gold.front();
}

}  // namespace

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::TokenRecall: return "token_recall";
    case Metric::ClosedAccuracy: return "closed_accuracy";
    case Metric::ChoiceAccuracy: return "choice_accuracy";
    case Metric::RougeL: return "rouge_l";
    case Metric::MultiLabelF1: return "multilabel_f1";
  }
  return "token_recall";
}

Metric metric_from_string(std::string_view s) {
  for (auto m : {Metric::TokenRecall, Metric::ClosedAccuracy, Metric::ChoiceAccuracy, Metric::RougeL,
                 Metric::MultiLabelF1}) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorCode::ConfigInvalid, std::string(s), "unknown metric '" + std::string(s) + "'");
}

std::vector<std::string> template_placeholders(std::string_view prompt_template) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = prompt_template.find('{', pos)) != std::string_view::npos) {
    const auto close = prompt_template.find('}', pos + 1);
    if (close == std::string_view::npos) break;
    const auto inner = prompt_template.substr(pos + 1, close - pos - 1);
    if (!inner.empty() && inner.find('{') == std::string_view::npos &&
        std::find(names.begin(), names.end(), inner) == names.end())
      names.emplace_back(inner);
    pos = close + 1;
  }
  return names;
}

void to_json(nlohmann::json& j, const EvalTaskSpec& s) {
  j = {{"name", s.name}, {"template", s.prompt_template}, {"metric", to_string(s.metric)}};
  if (s.options_field) j["options_field"] = *s.options_field;
  j["option_style"] = s.option_style == OptionStyle::Lettered ? "lettered" : "plain";
}

void from_json(const nlohmann::json& j, EvalTaskSpec& s) {
  s.name = j.at("name").get<std::string>();
  s.prompt_template = j.at("template").get<std::string>();
  s.metric = metric_from_string(j.at("metric").get<std::string>());
  s.options_field.reset();
  if (j.contains("options_field") && j["options_field"].is_string()) s.options_field = j["options_field"].get<std::string>();
  s.option_style = j.value("option_style", std::string("plain")) == "lettered" ? OptionStyle::Lettered : OptionStyle::Plain;
}

std::vector<EvalTaskSpec> builtin_eval_tasks() {
  const std::string food101 =
      "What type of food is shown in this image?\n"
      "Choose one type from the following options:\n"
      "{food type options}";
  const std::string foodseg =
      "Identify the food categories present in the image.\n"
      "The available categories are: {options}\n"
      "Please return a list of the selected food categories, formatted as a list of names like "
      "[candy, egg tart, french fries, chocolate].";
  const std::string remote = "What is the category of this remote sensing image?\n"
                             "Answer the question using a single word or phrase.\n"
                             "Reference categories include: ";
  return {
      {"slake_open", "{question}", Metric::TokenRecall, std::nullopt, OptionStyle::Plain},
      {"slake_closed", "{question}", Metric::ClosedAccuracy, std::nullopt, OptionStyle::Plain},
      {"pathvqa_open", "{question}", Metric::TokenRecall, std::nullopt, OptionStyle::Plain},
      {"pathvqa_closed", "{question}", Metric::ClosedAccuracy, std::nullopt, OptionStyle::Plain},
      {"vqa_rad_open", "{question}", Metric::TokenRecall, std::nullopt, OptionStyle::Plain},
      {"vqa_rad_closed", "{question}", Metric::ClosedAccuracy, std::nullopt, OptionStyle::Plain},
      {"pmc_vqa", "Question: {question}\nThe choices are: {options}", Metric::ChoiceAccuracy, "options",
       OptionStyle::Lettered},
      {"recipe1m", "{question}", Metric::RougeL, std::nullopt, OptionStyle::Plain},
      {"nutrition5k", "What ingredients are used to make the dish in the image?", Metric::TokenRecall, std::nullopt,
       OptionStyle::Plain},
      {"food101", food101, Metric::ChoiceAccuracy, "food type options", OptionStyle::Plain},
      {"foodseg103", foodseg, Metric::MultiLabelF1, "options", OptionStyle::Plain},
      {"clrs", remote + "{scene options}", Metric::ChoiceAccuracy, "scene options", OptionStyle::Plain},
      {"uc_merced", remote + "{land-use options}", Metric::ChoiceAccuracy, "land-use options", OptionStyle::Plain},
      {"floodnet", "{question}", Metric::ChoiceAccuracy, std::nullopt, OptionStyle::Plain},
      {"nwpu_captions", "Please provide an one-sentence caption for the provided remote sensing image in details.",
       Metric::RougeL, std::nullopt, OptionStyle::Plain},
  };
}

std::vector<EvalTaskSpec> load_eval_tasks(const std::filesystem::path& path) {
  try {
    auto j = nlohmann::json::parse(read_text_file(path));
    if (j.is_object()) j = j.at("tasks");
    return j.get<std::vector<EvalTaskSpec>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string(), "bad task spec file: " + std::string(e.what()));
  }
}

const EvalTaskSpec& find_task(std::span<const EvalTaskSpec> tasks, std::string_view name) {
  for (const auto& t : tasks) {
    if (t.name == name) return t;
  }
  std::string available;
  for (const auto& t : tasks) available += (available.empty() ? "" : ", ") + t.name;
  throw Error(ErrorCode::InvalidArgument, std::string(name),
              "unknown task '" + std::string(name) + "'; available tasks: " + available);
}

void to_json(nlohmann::json& j, const EvalInstance& i) {
  j = {{"id", i.id}, {"image", i.image}, {"fields", i.fields}, {"gold", i.gold}};
  if (!i.options.empty()) j["options"] = i.options;
}

void from_json(const nlohmann::json& j, EvalInstance& i) {
  try {
    i.id = j.at("id").get<std::string>();
    i.image = j.at("image").get<ImageRef>();
    i.fields = j.value("fields", std::map<std::string, std::string>{});
    const auto& gold = j.at("gold");
    i.gold = gold.is_string() ? std::vector<std::string>{gold.get<std::string>()} : gold.get<std::vector<std::string>>();
    i.options = j.value("options", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::RecordInvalid, e.what());
  }
  if (i.gold.empty() || std::all_of(i.gold.begin(), i.gold.end(), [](const auto& g) { return text::is_blank(g); }))
    throw Error(ErrorCode::RecordInvalid, "gold answer is empty");
}

LoadResult<EvalInstance> load_eval_instances(const std::filesystem::path& path, std::optional<std::size_t> limit) {
  auto raw = load_json_lines(path, limit);
  LoadResult<EvalInstance> out;
  out.rejects = std::move(raw.rejects);
  std::size_t line = 0;
  for (const auto& row : raw.records) {
    ++line;
    try {
      out.records.push_back(row.get<EvalInstance>());
    } catch (const Error& e) {
      out.rejects.push_back({line, e.what()});
    }
  }
  return out;
}

ChatRequest render_eval_prompt(const EvalTaskSpec& spec, const EvalInstance& instance, const EvalOptions& options) {
  std::string filled;
  const auto& tmpl = spec.prompt_template;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    const auto close = open == std::string::npos ? open : tmpl.find('}', open + 1);
    if (close == std::string::npos) {
      filled.append(tmpl, pos);
      break;
    }
    const auto name = tmpl.substr(open + 1, close - open - 1);
    filled.append(tmpl, pos, open - pos);
    if (const auto it = instance.fields.find(name); it != instance.fields.end()) {
      filled += it->second;
    } else if (spec.options_field && name == *spec.options_field && !instance.options.empty()) {
      filled += render_options(spec, instance.options);
    } else {
      throw Error(ErrorCode::MissingPlaceholder, name, "missing placeholder '" + name + "' for instance " + instance.id);
    }
    pos = close + 1;
  }
  ChatRequest req;
  req.messages.push_back({MessageRole::User, std::move(filled), instance.image});
  req.max_new_tokens = options.max_new_tokens;
  req.temperature = options.temperature;
  return req;
}

double score_prediction(const EvalTaskSpec& spec, const EvalInstance& instance, std::string_view prediction) {
  switch (spec.metric) {
    case Metric::TokenRecall: return score_token_recall(prediction, text::join(instance.gold, " "));
    case Metric::ClosedAccuracy: return score_closed_accuracy(prediction, first_gold(instance));
    case Metric::ChoiceAccuracy: return score_choice_accuracy(prediction, instance.options, first_gold(instance));
    case Metric::RougeL: return score_rouge_l(prediction, first_gold(instance));
    case Metric::MultiLabelF1: return score_multilabel_f1(prediction, instance.gold, instance.options);
  }
  return 0.0;
}

void to_json(nlohmann::json& j, const InstanceScore& s) {
  j = {{"id", s.id}, {"score", s.score}, {"prediction", s.prediction}, {"failed", s.failed}};
  if (!s.error.empty()) j["error"] = s.error;
}

void to_json(nlohmann::json& j, const ScoreReport& r) {
  j = {{"task", r.task_name}, {"n", r.n}, {"mean_score", r.mean_score}, {"failures", r.failures}};
}

ScoreReport run_eval(const EvalTaskSpec& spec, std::span<const EvalInstance> instances, ChatBackend& backend,
                     std::size_t max_in_flight, const EvalOptions& options) {
  // Prompt problems are configuration errors, not per-instance failures.
  std::vector<ChatRequest> requests;
  requests.reserve(instances.size());
  for (const auto& inst : instances) {
    requests.push_back(render_eval_prompt(spec, inst, options));
    (void)score_prediction(spec, inst, "");  // rejects gold the metric cannot score
  }

  ScoreReport report;
  report.task_name = spec.name;
  report.per_instance = ordered_parallel_map(instances.size(), max_in_flight, [&](std::size_t i) {
    InstanceScore s;
    s.id = instances[i].id;
    try {
      s.prediction = backend.complete(requests[i]);
    } catch (const std::exception& e) {
      s.failed = true;
      s.error = e.what();
      return s;
    }
    s.score = score_prediction(spec, instances[i], s.prediction);
    return s;
  });
  report.n = report.per_instance.size();
  double sum = 0.0;
  for (const auto& s : report.per_instance) {
    sum += s.score;
    report.failures += s.failed ? 1 : 0;
  }
  report.mean_score = report.n ? 100.0 * sum / static_cast<double>(report.n) : 0.0;
  return report;
}

std::string format_score_table(std::span<const ScoreReport> reports) {
  std::size_t width = 4;
  for (const auto& r : reports) width = std::max(width, r.task_name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width) + 2) << "Task" << std::right << std::setw(8) << "N"
     << std::setw(10) << "Score" << std::setw(10) << "Failures" << '\n';
  for (const auto& r : reports) {
    os << std::left << std::setw(static_cast<int>(width) + 2) << r.task_name << std::right << std::setw(8) << r.n
       << std::setw(10) << std::fixed << std::setprecision(1) << r.mean_score << std::setw(10) << r.failures << '\n';
  }
  return os.str();
}

}  // namespace visynth
