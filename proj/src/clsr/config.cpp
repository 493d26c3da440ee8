#include "clsr/config.hpp"

#include <algorithm>

namespace clsr {

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{
      "clsr-10",          "clsr-20",          "clsr-10-cyclic-shift", "clsr-20-cyclic-shift",
      "clsr-10-vertical-shift", "clsr-20-vertical-shift", "clsr-10-scale", "clsr-20-scale"};
  return names;
}

TrainConfig preset(const std::string& name) {
  const auto& names = preset_names();
  require(std::find(names.begin(), names.end(), name) != names.end(), ErrorKind::Config,
          "unknown preset '" + name + "'");
  TrainConfig cfg;
  cfg.name = name;
  cfg.tau = name.rfind("clsr-20", 0) == 0 ? 0.20 : 0.10;
  cfg.augmentations.cyclic_shift = name.ends_with("-cyclic-shift");
  cfg.augmentations.vertical_shift = name.ends_with("-vertical-shift");
  cfg.augmentations.scale = name.ends_with("-scale");
  return cfg;
}

void RunConfig::apply_preset(const std::string& name) {
  const TrainConfig p = clsr::preset(name);
  preset = name;
  train.name = p.name;
  train.tau = p.tau;
  train.augmentations.cyclic_shift = p.augmentations.cyclic_shift;
  train.augmentations.vertical_shift = p.augmentations.vertical_shift;
  train.augmentations.scale = p.augmentations.scale;
  prep.augmentations.cyclic_shift = p.augmentations.cyclic_shift;
  prep.augmentations.vertical_shift = p.augmentations.vertical_shift;
  prep.augmentations.scale = p.augmentations.scale;
}

void RunConfig::propagate_seed() {
  prep.rng_seed = seed;
  train.rng_seed = seed;
  unlabeled.rng_seed = seed;
  labeled.rng_seed = seed;
}

void RunConfig::validate() const {
  prep.validate();
  train.validate();
  model.validate();
  require(train_pairs > 0 && val_pairs > 0, ErrorKind::Config, "train_pairs and val_pairs must be positive");
  require(!eval_ks.empty(), ErrorKind::Config, "eval ks must not be empty");
  for (auto k : eval_ks) require(k >= 1, ErrorKind::Config, "eval ks must be >= 1");
  require(model.steps * 2 * static_cast<std::size_t>(prep.window_seconds) ==
              static_cast<std::size_t>(prep.segment_minutes) * 60,
          ErrorKind::Config, "model steps must be half the number of windows per segment");
  require(labeled.spec.steps == model.steps, ErrorKind::Config, "labeled situations must match model steps");
  require(labeled.sentinel == prep.sentinel, ErrorKind::Config, "labeled and prepared data must share the sentinel");
  for (const auto& name : reproduce_presets) clsr::preset(name);
}

namespace {

template <typename T>
void take(const jsonl::Json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const jsonl::Json& doc) {
  require(doc.is_object(), ErrorKind::Config, "config must be a JSON object");
  RunConfig cfg;
  try {
    take(doc, "seed", cfg.seed);
    cfg.apply_preset(doc.value("preset", cfg.preset));
    if (doc.contains("data")) {
      const auto& d = doc["data"];
      take(d, "series", cfg.unlabeled.series);
      take(d, "hours_per_series", cfg.unlabeled.hours_per_series);
      take(d, "missing_rate", cfg.unlabeled.missing_rate);
      take(d, "mean_episode", cfg.unlabeled.mean_episode);
      take(d, "members_per_class", cfg.labeled.members_per_class);
      take(d, "distractors", cfg.labeled.distractors);
      take(d, "train_pairs", cfg.train_pairs);
      take(d, "val_pairs", cfg.val_pairs);
    }
    if (doc.contains("prep")) cfg.prep = jsonl::prep_config_from_json(doc["prep"], cfg.prep);
    if (doc.contains("train")) {
      const auto& t = doc["train"];
      take(t, "tau", cfg.train.tau);
      take(t, "batch_size", cfg.train.batch_situations);
      take(t, "lr", cfg.train.lr);
      take(t, "weight_decay", cfg.train.weight_decay);
      take(t, "patience", cfg.train.patience);
      take(t, "max_epochs", cfg.train.max_epochs);
    }
    if (doc.contains("model")) {
      const auto& m = doc["model"];
      take(m, "steps", cfg.model.steps);
      take(m, "embedding", cfg.model.embedding);
      take(m, "conv_widths", cfg.model.conv_widths);
      take(m, "dense_units", cfg.model.dense_units);
      take(m, "kernel", cfg.model.kernel);
      take(m, "dropout", cfg.model.dropout);
      take(m, "bn_epsilon", cfg.model.bn_epsilon);
      take(m, "bn_momentum", cfg.model.bn_momentum);
    }
    if (doc.contains("eval")) take(doc["eval"], "ks", cfg.eval_ks);
    if (doc.contains("reproduce")) take(doc["reproduce"], "presets", cfg.reproduce_presets);
  } catch (const jsonl::Json::exception& e) {
    fail(ErrorKind::Config, std::string("config: ") + e.what());
  }
  cfg.labeled.spec.steps = cfg.model.steps;
  cfg.labeled.sentinel = cfg.prep.sentinel;
  cfg.propagate_seed();
  cfg.validate();
  return cfg;
}

jsonl::Json to_json(const TrainConfig& cfg) {
  jsonl::Json j;
  j["name"] = cfg.name;
  j["tau"] = cfg.tau;
  j["batch_size"] = cfg.batch_situations;
  j["lr"] = cfg.lr;
  j["weight_decay"] = cfg.weight_decay;
  j["patience"] = cfg.patience;
  j["max_epochs"] = cfg.max_epochs;
  j["rng_seed"] = cfg.rng_seed;
  j["augmentations"] = {{"cyclic_shift", cfg.augmentations.cyclic_shift},
                        {"vertical_shift", cfg.augmentations.vertical_shift},
                        {"scale", cfg.augmentations.scale}};
  return j;
}

jsonl::Json to_json(const RunConfig& cfg) {
  jsonl::Json j;
  j["seed"] = cfg.seed;
  j["preset"] = cfg.preset;
  j["data"] = {{"series", cfg.unlabeled.series},
               {"hours_per_series", cfg.unlabeled.hours_per_series},
               {"missing_rate", cfg.unlabeled.missing_rate},
               {"mean_episode", cfg.unlabeled.mean_episode},
               {"members_per_class", cfg.labeled.members_per_class},
               {"distractors", cfg.labeled.distractors},
               {"train_pairs", cfg.train_pairs},
               {"val_pairs", cfg.val_pairs}};
  j["prep"] = jsonl::to_json(cfg.prep);
  j["train"] = to_json(cfg.train);
  j["model"] = {{"steps", cfg.model.steps},
                {"embedding", cfg.model.embedding},
                {"conv_widths", cfg.model.conv_widths},
                {"dense_units", cfg.model.dense_units},
                {"kernel", cfg.model.kernel},
                {"dropout", jsonl::tidy(cfg.model.dropout)},
                {"bn_epsilon", jsonl::tidy(cfg.model.bn_epsilon)},
                {"bn_momentum", jsonl::tidy(cfg.model.bn_momentum)}};
  j["eval"] = {{"ks", cfg.eval_ks}};
  j["reproduce"] = {{"presets", cfg.reproduce_presets}};
  return j;
}

}  // namespace clsr
