// SPDX-License-Identifier: Apache-2.0
#include "hoprouter/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hoprouter/error.hpp"

namespace hoprouter::config {

using json = nlohmann::json;

namespace {

/// Walks one JSON object, remembering which keys were consumed so leftovers
/// can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& doc, std::string where) : doc_(doc), where_(std::move(where)) {
    if (!doc_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = doc_.find(key);
    if (it == doc_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key) + ": wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  const json& require(const char* key) {
    const json* c = child(key);
    if (c == nullptr) throw ConfigError(path(key) + ": required key missing");
    return *c;
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : doc_.items())
      if (!seen_.count(key)) throw ConfigError(path(key) + ": unknown key");
  }

 private:
  const json& doc_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": wrong type");
  }
}

const char* kind_name(backends::BackendKind k) {
  switch (k) {
    case backends::BackendKind::kSimulated: return "simulated";
    case backends::BackendKind::kReplay: return "replay";
    case backends::BackendKind::kRemote: return "remote";
  }
  return "?";
}

}  // namespace

backends::ModelSpec parse_model_spec(const json& doc, const std::string& where) {
  ObjectReader r(doc, where);
  backends::ModelSpec spec;
  r.read("name", spec.name);
  r.read("base_rate", spec.base_rate);
  std::string kind;
  r.read("kind", kind);
  if (spec.name.empty()) throw ConfigError(r.path("name") + ": required");
  static const json kEmpty = json::object();
  const json* params = r.child("params");
  if (params == nullptr) params = &kEmpty;
  const std::string pwhere = r.path("params");

  if (kind == "simulated") {
    ObjectReader p(*params, pwhere);
    backends::SpecialistProfile prof;
    p.read("skill", prof.skill);
    p.read("out_tokens", prof.out_tokens);
    p.read("distractors", prof.wrong_answer_vocabulary);
    p.read("filler", prof.filler);
    p.finish();
    spec.params = std::move(prof);
  } else if (kind == "replay") {
    ObjectReader p(*params, pwhere);
    backends::ReplayScript script;
    std::map<std::string, std::string> responses;
    p.read("script", responses);
    script.responses.insert(responses.begin(), responses.end());
    p.finish();
    spec.params = std::move(script);
  } else if (kind == "remote") {
    ObjectReader p(*params, pwhere);
    backends::RemoteEndpoint ep;
    p.read("url", ep.url);
    p.read("model", ep.model);
    p.read("timeout_ms", ep.timeout_ms);
    p.read("max_retries", ep.max_retries);
    p.read("backoff_ms", ep.backoff_ms);
    p.read("max_tokens", ep.max_tokens);
    p.read("api_key_env", ep.api_key_env);
    p.finish();
    if (ep.url.empty()) throw ConfigError(pwhere + ".url: required");
    spec.params = std::move(ep);
  } else {
    throw ConfigError(r.path("kind") + ": expected simulated, replay or remote");
  }
  r.finish();
  return spec;
}

json to_json(const backends::ModelSpec& spec) {
  json params;
  std::visit(
      [&params](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, backends::SpecialistProfile>) {
          params = {{"skill", p.skill},
                    {"out_tokens", p.out_tokens},
                    {"distractors", p.wrong_answer_vocabulary},
                    {"filler", p.filler}};
        } else if constexpr (std::is_same_v<T, backends::ReplayScript>) {
          params = {{"script", std::map<std::string, std::string>(p.responses.begin(), p.responses.end())}};
        } else {
          params = {{"url", p.url},           {"model", p.model},           {"timeout_ms", p.timeout_ms},
                    {"max_retries", p.max_retries}, {"backoff_ms", p.backoff_ms}, {"max_tokens", p.max_tokens},
                    {"api_key_env", p.api_key_env}};
        }
      },
      spec.params);
  return {{"name", spec.name}, {"base_rate", spec.base_rate}, {"kind", kind_name(spec.kind())}, {"params", params}};
}

ppo::PpoConfig parse_ppo(const json& doc, const std::string& where, ppo::PpoConfig c) {
  ObjectReader r(doc, where);
  r.read("gamma", c.gamma);
  r.read("lambda", c.lambda);
  r.read("clip", c.clip);
  r.read("value_coef", c.value_coef);
  r.read("entropy_coef", c.entropy_coef);
  r.read("max_grad_norm", c.max_grad_norm);
  r.read("lr", c.lr);
  r.read("adam_eps", c.adam_eps);
  r.read("adam_beta1", c.adam_beta1);
  r.read("adam_beta2", c.adam_beta2);
  r.read("iterations", c.iterations);
  r.read("rollouts_per_iter", c.rollouts_per_iter);
  r.read("minibatches", c.minibatches);
  r.read("epochs_per_iter", c.epochs_per_iter);
  r.read("seed", c.seed);
  r.read("advantage_norm", c.advantage_norm);
  r.read("advantage_clip", c.advantage_clip);
  r.read("threads", c.threads);
  std::string schedule = c.lr_schedule == ppo::LrSchedule::kCosine ? "cosine" : "constant";
  r.read("lr_schedule", schedule);
  if (schedule == "constant") c.lr_schedule = ppo::LrSchedule::kConstant;
  else if (schedule == "cosine") c.lr_schedule = ppo::LrSchedule::kCosine;
  else throw ConfigError(r.path("lr_schedule") + ": expected constant or cosine");
  r.finish();
  return c;
}

json to_json(const ppo::PpoConfig& c) {
  return {{"gamma", c.gamma},
          {"lambda", c.lambda},
          {"clip", c.clip},
          {"value_coef", c.value_coef},
          {"entropy_coef", c.entropy_coef},
          {"max_grad_norm", c.max_grad_norm},
          {"lr", c.lr},
          {"adam_eps", c.adam_eps},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"iterations", c.iterations},
          {"rollouts_per_iter", c.rollouts_per_iter},
          {"minibatches", c.minibatches},
          {"epochs_per_iter", c.epochs_per_iter},
          {"seed", c.seed},
          {"advantage_norm", c.advantage_norm},
          {"advantage_clip", c.advantage_clip},
          {"threads", c.threads},
          {"lr_schedule", c.lr_schedule == ppo::LrSchedule::kCosine ? "cosine" : "constant"}};
}

EpisodeConfig parse_episode(const json& doc, const std::string& where) {
  ObjectReader r(doc, where);
  EpisodeConfig e;
  r.read("max_hops", e.max_hops);
  r.read("halting_enabled", e.halting_enabled);
  if (const json* prompts = r.child("layer_prompts")) {
    e.layer_prompts = get_as<std::vector<std::string>>(*prompts, r.path("layer_prompts"));
  } else if (e.max_hops != 2) {
    // Default prompts only cover two hops; deeper pipelines repeat the last one.
    e.layer_prompts.resize(static_cast<std::size_t>(std::max(e.max_hops, 1)), e.layer_prompts.back());
  }
  r.finish();
  return e;
}

json to_json(const EpisodeConfig& e) {
  return {{"max_hops", e.max_hops}, {"halting_enabled", e.halting_enabled}, {"layer_prompts", e.layer_prompts}};
}

encoder::EncoderConfig parse_encoder(const json& doc, const std::string& where) {
  ObjectReader r(doc, where);
  encoder::EncoderConfig e;
  r.read("embed_dim", e.embed_dim);
  r.read("max_context_tokens", e.max_context_tokens);
  r.read("hash_seed", e.hash_seed);
  r.read("cost_scale", e.cost_scale);
  r.finish();
  return e;
}

json to_json(const encoder::EncoderConfig& e) {
  return {{"embed_dim", e.embed_dim},
          {"max_context_tokens", e.max_context_tokens},
          {"hash_seed", e.hash_seed},
          {"cost_scale", e.cost_scale}};
}

void RunConfig::validate() const {
  if (pool.empty()) throw ConfigError("pool: at least one model required");
  std::set<std::string> names;
  for (const auto& m : pool) {
    if (!(m.base_rate > 0.0)) throw ConfigError("pool: model '" + m.name + "' needs base_rate > 0");
    if (!names.insert(m.name).second) throw ConfigError("pool: duplicate model name '" + m.name + "'");
  }
  episode.validate();
  if (!(reward.alpha >= 0.0)) throw ConfigError("reward.alpha must be non-negative");
  ppo.validate();
  if (encoder.embed_dim < 1) throw ConfigError("encoder.embed_dim must be >= 1");
  if (encoder.max_context_tokens < 1) throw ConfigError("encoder.max_context_tokens must be >= 1");
  if (hidden < 1) throw ConfigError("policy.hidden must be >= 1");
  if (!(data.train_fraction > 0.0 && data.train_fraction < 1.0)) throw ConfigError("data.train_fraction must lie in (0,1)");
}

policy::PolicyShape RunConfig::policy_shape() const {
  const int m = static_cast<int>(pool.size());
  return {episode.max_hops, encoder.embed_dim, hidden, episode.halting_enabled ? 2 * m : m};
}

RunConfig parse_run_config(const json& doc, const std::string& base_dir) {
  ObjectReader r(doc, "");
  RunConfig cfg;

  const json& pool = r.require("pool");
  if (!pool.is_array()) throw ConfigError("pool: expected an array");
  for (std::size_t i = 0; i < pool.size(); ++i) cfg.pool.push_back(parse_model_spec(pool[i], "pool[" + std::to_string(i) + "]"));

  if (const json* e = r.child("episode")) cfg.episode = parse_episode(*e, "episode");
  if (const json* rw = r.child("reward")) {
    ObjectReader rr(*rw, "reward");
    rr.read("alpha", cfg.reward.alpha);
    rr.finish();
  }
  if (const json* p = r.child("ppo")) cfg.ppo = parse_ppo(*p, "ppo");
  if (const json* e = r.child("encoder")) cfg.encoder = parse_encoder(*e, "encoder");
  if (const json* p = r.child("policy")) {
    ObjectReader pr(*p, "policy");
    pr.read("hidden", cfg.hidden);
    pr.finish();
  }
  if (const json* d = r.child("data")) {
    ObjectReader dr(*d, "data");
    dr.read("datasets", cfg.data.datasets);
    dr.read("cap", cfg.data.cap);
    dr.read("train_fraction", cfg.data.train_fraction);
    dr.read("split_seed", cfg.data.split_seed);
    dr.finish();
  }
  r.read("output_dir", cfg.output_dir);
  r.finish();

  if (!base_dir.empty()) {
    const auto resolve = [&base_dir](std::string& p) {
      if (!p.empty() && std::filesystem::path(p).is_relative()) p = (std::filesystem::path(base_dir) / p).string();
    };
    for (auto& p : cfg.data.datasets) resolve(p);
    resolve(cfg.output_dir);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json doc = json::parse(ss.str(), nullptr, false);
  if (doc.is_discarded()) throw ConfigError(path + ": not valid JSON");
  return parse_run_config(doc, std::filesystem::path(path).parent_path().string());
}

json to_json(const RunConfig& cfg) {
  json pool = json::array();
  for (const auto& m : cfg.pool) pool.push_back(to_json(m));
  return {{"pool", pool},
          {"episode", to_json(cfg.episode)},
          {"reward", {{"alpha", cfg.reward.alpha}}},
          {"ppo", to_json(cfg.ppo)},
          {"encoder", to_json(cfg.encoder)},
          {"policy", {{"hidden", cfg.hidden}}},
          {"data",
           {{"datasets", cfg.data.datasets},
            {"cap", cfg.data.cap},
            {"train_fraction", cfg.data.train_fraction},
            {"split_seed", cfg.data.split_seed}}},
          {"output_dir", cfg.output_dir}};
}

}  // namespace hoprouter::config
