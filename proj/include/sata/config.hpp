#pragma once

// Run configuration: model, training and file paths, read from JSON with
// dotted-key overrides ("train.lr=0.01").

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sata/core/error.hpp"
#include "sata/io.hpp"
#include "sata/model.hpp"
#include "sata/training/optim.hpp"

namespace sata {

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double clip = 5.0;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool phrase_supervision = false;
  std::string selection = "dev_acc";  // dev_acc | train_acc
  std::size_t cv_folds = 0;

  void validate() const {
    if (!(lr >= 0.0)) throw ConfigError("lr must be non-negative");
    if (!(clip > 0.0)) throw ConfigError("clip norm must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (workers == 0) throw ConfigError("workers must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("betas must be in [0, 1)");
    if (rho < 0.0 || rho >= 1.0) throw ConfigError("rho must be in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
    if (selection != "dev_acc" && selection != "train_acc") throw ConfigError("selection must be dev_acc or train_acc");
    if (cv_folds == 1) throw ConfigError("cv_folds must be 0 or at least 2");
  }

  AdamHyper adam() const { return AdamHyper{lr, beta1, beta2, eps, weight_decay}; }
  AdadeltaHyper adadelta() const { return AdadeltaHyper{lr, rho, eps, weight_decay}; }
};

struct PathConfig {
  std::string train;
  std::string dev;
  std::string test;
  std::string embeddings;
  std::string cluster_map;
  std::string out_dir = "runs/default";
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  PathConfig paths;

  void validate() const {
    model.validate();
    train.validate();
  }
};

namespace detail {

using nlohmann::json;

// Reads known keys from an object and rejects anything else.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      bool known = false;
      for (const std::string& k : seen_) known = known || k == key;
      if (!known) throw ConfigError("unknown config key '" + where_ + "." + key + "'");
    }
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.emplace_back(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + where_ + "." + key + "': " + e.what());
    }
  }
  template <class Enum, class Parse>
  void get_enum(const char* key, Enum& out, Parse parse) {
    std::string s;
    get(key, s);
    if (!s.empty()) out = parse(s);
  }
  const json* child(const char* key) {
    seen_.emplace_back(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

inline void check_non_negative_size(const json& j, const char* where) {
  // Guard against -1 being read into size_t.
  for (const auto& [key, value] : j.items())
    if (value.is_number_integer() && !value.is_number_unsigned() && value.get<long long>() < 0)
      throw ConfigError(std::string(where) + "." + key + " must be non-negative");
}

}  // namespace detail

inline nlohmann::json to_json(const EncoderConfig& c) {
  return {{"d_w", c.d_w},
          {"d_h", c.d_h},
          {"d_t", c.d_t},
          {"leaf_mode", to_string(c.leaf_mode)},
          {"tag_mode", to_string(c.tag_mode)},
          {"embedding_dropout", c.embedding_dropout},
          {"forget_bias", c.forget_bias},
          {"train_word_embeddings", c.train_word_embeddings}};
}

inline nlohmann::json to_json(const HeadConfig& c) {
  return {{"task", to_string(c.task)}, {"d_s", c.d_s},       {"num_classes", c.num_classes}, {"batch_norm", c.batch_norm},
          {"dropout", c.dropout},      {"bn_momentum", c.bn_momentum}, {"bn_eps", c.bn_eps}};
}

inline nlohmann::json to_json(const ModelConfig& c) { return {{"encoder", to_json(c.encoder)}, {"head", to_json(c.head)}}; }

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"optimizer", to_string(c.optimizer)},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"rho", c.rho},
          {"eps", c.eps},
          {"weight_decay", c.weight_decay},
          {"clip", c.clip},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"workers", c.workers},
          {"phrase_supervision", c.phrase_supervision},
          {"selection", c.selection},
          {"cv_folds", c.cv_folds}};
}

inline nlohmann::json to_json(const PathConfig& c) {
  return {{"train", c.train},
          {"dev", c.dev},
          {"test", c.test},
          {"embeddings", c.embeddings},
          {"cluster_map", c.cluster_map},
          {"out_dir", c.out_dir}};
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j = to_json(c.model);
  j["train"] = to_json(c.train);
  j["paths"] = to_json(c.paths);
  return j;
}

inline void from_json_into(const nlohmann::json& j, EncoderConfig& c) {
  detail::check_non_negative_size(j, "encoder");
  detail::ObjectReader r(j, "encoder");
  r.get("d_w", c.d_w);
  r.get("d_h", c.d_h);
  r.get("d_t", c.d_t);
  r.get_enum("leaf_mode", c.leaf_mode, parse_leaf_mode);
  r.get_enum("tag_mode", c.tag_mode, parse_tag_mode);
  r.get("embedding_dropout", c.embedding_dropout);
  r.get("forget_bias", c.forget_bias);
  r.get("train_word_embeddings", c.train_word_embeddings);
  r.finish();
}

inline void from_json_into(const nlohmann::json& j, HeadConfig& c) {
  detail::check_non_negative_size(j, "head");
  detail::ObjectReader r(j, "head");
  r.get_enum("task", c.task, parse_task);
  r.get("d_s", c.d_s);
  r.get("num_classes", c.num_classes);
  r.get("batch_norm", c.batch_norm);
  r.get("dropout", c.dropout);
  r.get("bn_momentum", c.bn_momentum);
  r.get("bn_eps", c.bn_eps);
  r.finish();
}

inline void from_json_into(const nlohmann::json& j, TrainConfig& c) {
  detail::check_non_negative_size(j, "train");
  detail::ObjectReader r(j, "train");
  r.get_enum("optimizer", c.optimizer, parse_optimizer);
  r.get("lr", c.lr);
  r.get("beta1", c.beta1);
  r.get("beta2", c.beta2);
  r.get("rho", c.rho);
  r.get("eps", c.eps);
  r.get("weight_decay", c.weight_decay);
  r.get("clip", c.clip);
  r.get("batch_size", c.batch_size);
  r.get("epochs", c.epochs);
  r.get("seed", c.seed);
  r.get("workers", c.workers);
  r.get("phrase_supervision", c.phrase_supervision);
  r.get("selection", c.selection);
  r.get("cv_folds", c.cv_folds);
  r.finish();
}

inline void from_json_into(const nlohmann::json& j, PathConfig& c) {
  detail::ObjectReader r(j, "paths");
  r.get("train", c.train);
  r.get("dev", c.dev);
  r.get("test", c.test);
  r.get("embeddings", c.embeddings);
  r.get("cluster_map", c.cluster_map);
  r.get("out_dir", c.out_dir);
  r.finish();
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  detail::ObjectReader r(j, "model");
  if (const auto* e = r.child("encoder")) from_json_into(*e, c.encoder);
  if (const auto* h = r.child("head")) from_json_into(*h, c.head);
  r.finish();
  return c;
}

// Missing keys keep their defaults; unknown keys are errors. The result is
// validated.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  {
    detail::ObjectReader r(j, "config");
    if (const auto* e = r.child("encoder")) from_json_into(*e, c.model.encoder);
    if (const auto* h = r.child("head")) from_json_into(*h, c.model.head);
    if (const auto* t = r.child("train")) from_json_into(*t, c.train);
    if (const auto* p = r.child("paths")) from_json_into(*p, c.paths);
    r.finish();
  }
  c.validate();
  return c;
}

// "a.b=value": value is parsed as JSON when possible, otherwise taken as a
// string.
inline void apply_override(nlohmann::json& j, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value, got '" + std::string(assignment) + "'");
  }
  std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  std::string pointer = "/";
  for (char ch : key) pointer += ch == '.' ? '/' : ch;
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  j[nlohmann::json::json_pointer(pointer)] = value;
}

inline RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  nlohmann::json j;
  if (!path.empty()) {
    j = nlohmann::json::parse(io::read_file(path), nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file " + path + " is not valid JSON");
  } else {
    j = nlohmann::json::object();
  }
  for (const std::string& o : overrides) apply_override(j, o);
  return run_config_from_json(j);
}

// FNV-1a over the canonical JSON of the model section.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t config_digest(const ModelConfig& c) { return fnv1a(to_json(c).dump()); }

}  // namespace sata
