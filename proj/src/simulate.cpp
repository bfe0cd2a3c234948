// SPDX-License-Identifier: Apache-2.0
#include "hoprouter/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "hoprouter/error.hpp"
#include "hoprouter/evalkit.hpp"

namespace hoprouter::simulate {

using json = nlohmann::json;
using backends::ModelSpec;
using backends::SpecialistProfile;

namespace {

ModelSpec specialist(std::string name, double rate, double p_math, double p_code, int out_tokens) {
  SpecialistProfile prof;
  prof.skill = {{"math", p_math}, {"code", p_code}};
  prof.out_tokens = out_tokens;
  prof.wrong_answer_vocabulary = {"unsure", "perhaps zero", "cannot determine"};
  prof.filler = "step";
  return {std::move(name), rate, std::move(prof)};
}

}  // namespace

Scenario default_scenario() {
  Scenario s;
  s.specialists = {
      specialist("math-specialist", 0.002, 0.9, 0.1, 8),
      specialist("code-specialist", 0.003, 0.1, 0.9, 8),
      specialist("generalist", 0.003, 0.5, 0.5, 12),
  };
  s.tasks = {
      {"math", 300, {"compute", "sum", "integral", "equation", "solve", "derivative", "number", "total",
                     "arithmetic", "fraction", "algebra", "multiply"}},
      {"code", 300, {"write", "function", "python", "list", "return", "loop", "string", "array", "implement",
                     "class", "sort", "recursion"}},
  };
  return s;
}

Scenario parse_scenario(const json& doc) {
  if (!doc.is_object()) throw ConfigError("scenario: expected an object");
  Scenario s = default_scenario();
  static const std::set<std::string> kKnown = {"specialists", "tasks",  "episode",        "reward",
                                               "ppo",         "encoder", "policy",        "cap",
                                               "train_fraction", "eval_repeats"};
  for (const auto& [key, value] : doc.items())
    if (!kKnown.count(key)) throw ConfigError("scenario." + key + ": unknown key");
  try {
    if (doc.contains("specialists")) {
      s.specialists.clear();
      const auto& arr = doc.at("specialists");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        s.specialists.push_back(config::parse_model_spec(arr[i], fmt::format("scenario.specialists[{}]", i)));
        if (s.specialists.back().kind() != backends::BackendKind::kSimulated)
          throw ConfigError("scenario specialists must be of kind simulated");
      }
    }
    if (doc.contains("tasks")) {
      s.tasks.clear();
      for (const auto& t : doc.at("tasks")) {
        for (const auto& [key, value] : t.items())
          if (key != "name" && key != "count" && key != "keywords") throw ConfigError("scenario.tasks." + key + ": unknown key");
        s.tasks.push_back({t.at("name").get<std::string>(), t.value("count", 300),
                           t.at("keywords").get<std::vector<std::string>>()});
      }
    }
    if (doc.contains("episode")) s.episode = config::parse_episode(doc.at("episode"), "scenario.episode");
    if (doc.contains("reward")) {
      for (const auto& [key, value] : doc.at("reward").items())
        if (key != "alpha") throw ConfigError("scenario.reward." + key + ": unknown key");
      s.reward.alpha = doc.at("reward").value("alpha", s.reward.alpha);
    }
    if (doc.contains("ppo")) s.ppo = config::parse_ppo(doc.at("ppo"), "scenario.ppo", s.ppo);
    if (doc.contains("encoder")) s.encoder = config::parse_encoder(doc.at("encoder"), "scenario.encoder");
    if (doc.contains("policy")) s.hidden = doc.at("policy").at("hidden").get<int>();
    s.cap = doc.value("cap", s.cap);
    s.train_fraction = doc.value("train_fraction", s.train_fraction);
    s.eval_repeats = doc.value("eval_repeats", s.eval_repeats);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  if (s.specialists.empty() || s.tasks.empty()) throw ConfigError("scenario needs specialists and tasks");
  for (const auto& t : s.tasks)
    if (t.keywords.empty() || t.count < 1) throw ConfigError("scenario task '" + t.name + "' needs keywords and count >= 1");
  if (s.eval_repeats < 1) throw ConfigError("scenario.eval_repeats must be >= 1");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json doc = json::parse(ss.str(), nullptr, false);
  if (doc.is_discarded()) throw ConfigError(path + ": not valid JSON");
  return parse_scenario(doc);
}

json to_json(const Scenario& s) {
  json specialists = json::array();
  for (const auto& m : s.specialists) specialists.push_back(config::to_json(m));
  json tasks = json::array();
  for (const auto& t : s.tasks) tasks.push_back({{"name", t.name}, {"count", t.count}, {"keywords", t.keywords}});
  return {{"specialists", specialists},
          {"tasks", tasks},
          {"episode", config::to_json(s.episode)},
          {"reward", {{"alpha", s.reward.alpha}}},
          {"ppo", config::to_json(s.ppo)},
          {"encoder", config::to_json(s.encoder)},
          {"policy", {{"hidden", s.hidden}}},
          {"cap", s.cap},
          {"train_fraction", s.train_fraction},
          {"eval_repeats", s.eval_repeats}};
}

std::vector<std::vector<data::Example>> synthesize_datasets(const Scenario& s, std::uint64_t seed) {
  std::vector<std::vector<data::Example>> out;
  for (std::size_t ti = 0; ti < s.tasks.size(); ++ti) {
    const TaskSpec& task = s.tasks[ti];
    Rng rng(derive_seed(seed, {0x73796e7468ULL, ti}));
    std::vector<data::Example> examples;
    const std::size_t words = std::min<std::size_t>(7, task.keywords.size());
    for (int i = 0; i < task.count; ++i) {
      std::vector<std::string> pool = task.keywords;
      for (std::size_t k = pool.size(); k > 1; --k) std::swap(pool[k - 1], pool[uniform_index(rng, k)]);
      std::string query;
      for (std::size_t w = 0; w < words; ++w) query += pool[w] + " ";
      query += fmt::format("(case {})", i);
      examples.push_back({query, {fmt::format("{}ans{:04d}", task.name, i)}, task.name});
    }
    out.push_back(std::move(examples));
  }
  return out;
}

PreparedData prepare_splits(const std::vector<std::vector<data::Example>>& datasets, std::size_t cap,
                            double train_fraction, std::uint64_t seed) {
  PreparedData p;
  for (const auto& ds : datasets) {
    auto split = data::cap_and_split(ds, cap, train_fraction, seed);
    p.train.insert(p.train.end(), split.train.begin(), split.train.end());
    p.all_test.insert(p.all_test.end(), split.test.begin(), split.test.end());
    p.tests.push_back(std::move(split.test));
  }
  return p;
}

std::shared_ptr<backends::AnswerKey> build_answer_key(const std::vector<std::vector<data::Example>>& datasets) {
  auto key = std::make_shared<backends::AnswerKey>();
  for (const auto& ds : datasets)
    for (const auto& ex : ds) key->add({ex.query, ex.answers, ex.task});
  return key;
}

namespace {

/// One possible response of a specialist to one example.
struct Outcome {
  double prob = 0.0;
  bool success = false;
  std::int64_t raw_tokens = 0;   // charged output tokens
  std::int64_t norm_tokens = 0;  // tokens surviving F1 normalisation
};

std::vector<Outcome> specialist_outcomes(const SpecialistProfile& prof, const data::Example& ex) {
  const std::set<std::string> gold = [&] {
    std::set<std::string> g;
    for (const auto& a : ex.answers)
      for (auto& t : evalkit::normalized_tokens(a)) g.insert(std::move(t));
    return g;
  }();
  const std::int64_t filler_raw = backends::count_tokens(prof.filler);
  const auto filler_norm = static_cast<std::int64_t>(evalkit::normalized_tokens(prof.filler).size());

  const auto padded = [&](const std::string& text, double prob, bool success) {
    Outcome o{prob, success, backends::count_tokens(text),
              static_cast<std::int64_t>(evalkit::normalized_tokens(text).size())};
    if (filler_raw > 0 && o.raw_tokens < prof.out_tokens) {
      const std::int64_t pads = (prof.out_tokens - o.raw_tokens + filler_raw - 1) / filler_raw;
      o.raw_tokens += pads * filler_raw;
      o.norm_tokens += pads * filler_norm;
    }
    return o;
  };

  auto it = prof.skill.find(ex.task);
  const double p = it == prof.skill.end() ? 0.0 : it->second;
  std::vector<Outcome> outs;
  if (p > 0.0) outs.push_back(padded(ex.answers.front(), p, true));
  if (p < 1.0) {
    std::vector<const std::string*> eligible;
    for (const auto& d : prof.wrong_answer_vocabulary) {
      const auto toks = evalkit::normalized_tokens(d);
      if (std::none_of(toks.begin(), toks.end(), [&](const auto& t) { return gold.count(t) > 0; }))
        eligible.push_back(&d);
    }
    if (eligible.empty()) {
      outs.push_back(padded("", 1.0 - p, false));
    } else {
      for (const auto* d : eligible)
        outs.push_back(padded(*d, (1.0 - p) / static_cast<double>(eligible.size()), false));
    }
  }
  return outs;
}

void check_oracle_preconditions(const std::vector<ModelSpec>& pool, const data::Example& ex) {
  std::set<std::string> gold;
  for (auto& t : evalkit::normalized_tokens(ex.answers.front())) gold.insert(std::move(t));
  const auto clash = [&gold](std::string_view text) {
    for (const auto& t : evalkit::normalized_tokens(text))
      if (gold.count(t)) return true;
    return false;
  };
  if (gold.empty()) throw ConfigError("oracle: reference answer normalises to nothing");
  if (clash(ex.query)) throw ConfigError("oracle: reference answer tokens appear in the query");
  for (const auto& m : pool)
    if (clash(std::get<SpecialistProfile>(m.params).filler)) throw ConfigError("oracle: filler overlaps reference answer");
}

}  // namespace

std::vector<StaticSequenceValue> enumerate_static_sequences(const std::vector<ModelSpec>& pool,
                                                            const EpisodeConfig& episode, double alpha,
                                                            const std::vector<data::Example>& examples) {
  episode.validate();
  for (const auto& m : pool)
    if (m.kind() != backends::BackendKind::kSimulated) throw ConfigError("oracle needs simulated specialists only");
  if (examples.empty()) throw ConfigError("oracle needs at least one example");

  const std::size_t m_count = pool.size();
  const auto hops = static_cast<std::size_t>(episode.max_hops);
  std::size_t n_seq = 1;
  for (std::size_t h = 0; h < hops; ++h) n_seq *= m_count;

  std::vector<std::int64_t> prompt_tokens;
  for (const auto& p : episode.layer_prompts) prompt_tokens.push_back(backends::count_tokens(p));

  std::vector<StaticSequenceValue> values(n_seq);
  for (std::size_t s = 0; s < n_seq; ++s) {
    values[s].models.resize(hops);
    std::size_t code = s;
    for (std::size_t h = hops; h-- > 0;) {
      values[s].models[h] = code % m_count;
      code /= m_count;
    }
  }

  for (const auto& ex : examples) {
    check_oracle_preconditions(pool, ex);
    std::vector<std::vector<Outcome>> outcomes;
    for (const auto& m : pool) outcomes.push_back(specialist_outcomes(std::get<SpecialistProfile>(m.params), ex));
    const auto query_raw = backends::count_tokens(ex.query);
    const auto query_norm = static_cast<std::int64_t>(evalkit::normalized_tokens(ex.query).size());
    const auto gold_norm = static_cast<double>(evalkit::normalized_tokens(ex.answers.front()).size());

    for (auto& v : values) {
      double eq = 0.0;
      double ec = 0.0;
      // Depth-first over the per-hop outcome tree.
      const auto walk = [&](auto&& self, std::size_t hop, double prob, std::int64_t ctx_raw, std::int64_t ctx_norm,
                            bool any_success, double cost) -> void {
        if (hop == hops) {
          double q = 0.0;
          if (any_success) {
            const double precision = gold_norm / static_cast<double>(ctx_norm);
            const double recall = 1.0;
            q = 2.0 * precision * recall / (precision + recall);
          }
          eq += prob * q;
          ec += prob * cost;
          return;
        }
        const ModelSpec& model = pool[v.models[hop]];
        const std::int64_t tokens_in = prompt_tokens[hop] + ctx_raw;
        for (const Outcome& o : outcomes[v.models[hop]]) {
          self(self, hop + 1, prob * o.prob, ctx_raw + o.raw_tokens, ctx_norm + o.norm_tokens,
               any_success || o.success, cost + model.base_rate * static_cast<double>(tokens_in + o.raw_tokens));
        }
      };
      walk(walk, 0, 1.0, query_raw, query_norm, false, 0.0);
      v.expected_quality += eq;
      v.expected_cost += ec;
    }
  }

  const double n = static_cast<double>(examples.size());
  for (auto& v : values) {
    v.expected_quality /= n;
    v.expected_cost /= n;
    v.expected_net = v.expected_quality - alpha * v.expected_cost;
  }
  return values;
}

double SimulationSummary::margin_vs_best_single() const { return router_net - sequences[best_single].expected_net; }

double SimulationSummary::relative_margin_vs_best_single() const {
  const double base = std::abs(sequences[best_single].expected_net);
  return base > 0.0 ? margin_vs_best_single() / base : margin_vs_best_single();
}

namespace {

json sequence_json(const StaticSequenceValue& v, const Scenario& s) {
  std::vector<std::string> names;
  for (auto m : v.models) names.push_back(s.specialists[m].name);
  return {{"models", names},
          {"expected_quality", v.expected_quality},
          {"expected_cost", v.expected_cost},
          {"expected_net", v.expected_net}};
}

}  // namespace

json SimulationSummary::to_json(const Scenario& s, std::uint64_t seed) const {
  json seqs = json::array();
  for (const auto& v : sequences) seqs.push_back(sequence_json(v, s));
  json training_rows = json::array();
  for (const auto& r : training)
    training_rows.push_back({{"iter", r.iter},
                             {"mean_reward", r.mean_reward},
                             {"mean_quality", r.mean_quality},
                             {"mean_cost", r.mean_cost},
                             {"policy_loss", r.policy_loss},
                             {"value_loss", r.value_loss},
                             {"entropy", r.entropy},
                             {"clip_fraction", r.clip_fraction}});
  const auto& best_seq = sequences[best_sequence];
  return {{"seed", seed},
          {"alpha", s.reward.alpha},
          {"train_examples", train_examples},
          {"test_examples", test_examples},
          {"router",
           {{"mean_quality", router.mean_quality},
            {"mean_cost", router.mean_cost},
            {"mean_cost_per_1k_tokens", router.mean_cost * 1000.0},
            {"net_reward", router_net},
            {"episodes", router.episodes}}},
          {"best_static_sequence", sequence_json(best_seq, s)},
          {"best_single_model", sequence_json(sequences[best_single], s)},
          {"margin_vs_best_single", {{"absolute", margin_vs_best_single()}, {"relative", relative_margin_vs_best_single()}}},
          {"margin_vs_best_sequence", {{"absolute", router_net - best_seq.expected_net}}},
          {"static_sequences", seqs},
          {"training", training_rows}};
}

SimulationSummary run_simulation(const Scenario& s, std::uint64_t seed) {
  const auto datasets = synthesize_datasets(s, seed);
  const PreparedData prepared = prepare_splits(datasets, s.cap, s.train_fraction, seed);
  const backends::ModelPool pool(s.specialists, build_answer_key(datasets));
  const Environment env(pool, s.reward, s.episode);

  SimulationSummary summary;
  summary.train_examples = prepared.train.size();
  summary.test_examples = prepared.all_test.size();
  summary.sequences = enumerate_static_sequences(s.specialists, s.episode, s.reward.alpha, prepared.all_test);
  bool have_single = false;
  for (std::size_t i = 0; i < summary.sequences.size(); ++i) {
    const auto& v = summary.sequences[i];
    if (v.expected_net > summary.sequences[summary.best_sequence].expected_net) summary.best_sequence = i;
    const bool single = std::all_of(v.models.begin(), v.models.end(), [&](auto m) { return m == v.models.front(); });
    if (single && (!have_single || v.expected_net > summary.sequences[summary.best_single].expected_net)) {
      summary.best_single = i;
      have_single = true;
    }
  }

  ppo::PpoConfig cfg = s.ppo;
  cfg.seed = seed;
  const int m = static_cast<int>(pool.size());
  const policy::PolicyShape shape{s.episode.max_hops, s.encoder.embed_dim, s.hidden,
                                  s.episode.halting_enabled ? 2 * m : m};
  auto trained = ppo::train(prepared.train, env, policy::PolicyParameters::initialize(shape, seed), s.encoder, cfg);
  summary.training = std::move(trained.metrics);
  summary.router = report::evaluate_router(trained.params, env, s.encoder, prepared.all_test, s.eval_repeats, seed);
  summary.router_net = summary.router.mean_quality - s.reward.alpha * summary.router.mean_cost;
  return summary;
}

config::RunConfig scenario_run_config(const Scenario& s, std::uint64_t seed,
                                      const std::vector<std::string>& dataset_paths) {
  config::RunConfig cfg;
  cfg.pool = s.specialists;
  cfg.episode = s.episode;
  cfg.reward = s.reward;
  cfg.ppo = s.ppo;
  cfg.ppo.seed = seed;
  cfg.encoder = s.encoder;
  cfg.hidden = s.hidden;
  cfg.data.datasets = dataset_paths;
  cfg.data.cap = s.cap;
  cfg.data.train_fraction = s.train_fraction;
  cfg.data.split_seed = seed;
  cfg.output_dir = "out";
  return cfg;
}

void write_scenario_files(const Scenario& s, std::uint64_t seed, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto datasets = synthesize_datasets(s, seed);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    names.push_back(s.tasks[i].name + ".jsonl");
    data::write_dataset((std::filesystem::path(dir) / names.back()).string(), datasets[i]);
  }
  std::ofstream out(std::filesystem::path(dir) / "config.json", std::ios::binary);
  if (!out) throw IoError("cannot write " + dir + "/config.json");
  out << config::to_json(scenario_run_config(s, seed, names)).dump(2) << '\n';
}

}  // namespace hoprouter::simulate
