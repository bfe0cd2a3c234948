// SPDX-License-Identifier: Apache-2.0
#include "hoprouter/commands.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>

#include <json.hpp>

#include "hoprouter/config.hpp"
#include "hoprouter/error.hpp"
#include "hoprouter/report.hpp"
#include "hoprouter/simulate.hpp"

namespace hoprouter::commands {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

/// Maps the error taxonomy onto exit codes.
int guarded(Streams io, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    io.err << "config error: " << e.what() << '\n';
  } catch (const IoError& e) {
    io.err << "input error: " << e.what() << '\n';
  } catch (const ParseError& e) {
    io.err << "dataset parse error: " << e.what() << '\n';
  } catch (const CheckpointMismatch& e) {
    io.err << "checkpoint mismatch: " << e.what() << '\n';
  } catch (const EmptyQuery& e) {
    io.err << "input error: " << e.what() << '\n';
  } catch (const NonFiniteLoss& e) {
    io.err << "training failed (" << e.term() << "): " << e.what() << '\n';
    return kExitRuntimeError;
  } catch (const BackendFailure& e) {
    io.err << "backend failure: " << e.what() << '\n';
    return kExitRuntimeError;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitInputError;
}

std::vector<std::vector<data::Example>> load_all(const config::RunConfig& cfg) {
  std::vector<std::vector<data::Example>> out;
  for (const auto& p : cfg.data.datasets) {
    if (!fs::exists(p)) throw IoError("dataset not found: " + p);
    out.push_back(data::load_dataset(p));
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

policy::PolicyParameters load_matching(const std::string& path, const config::RunConfig& cfg) {
  policy::PolicyParameters params = policy::load_checkpoint(path);
  if (!(params.shape() == cfg.policy_shape()))
    throw CheckpointMismatch("checkpoint shape does not match the configured pool, encoder and hop count");
  return params;
}

}  // namespace

int cmd_train(const std::string& config_path, bool deterministic, Streams io) {
  return guarded(io, [&] {
    config::RunConfig cfg = config::load_run_config(config_path);
    if (cfg.data.datasets.empty()) throw ConfigError("data.datasets: at least one dataset required for training");
    if (deterministic) cfg.ppo.threads = 1;
    const auto datasets = load_all(cfg);
    const auto prepared = simulate::prepare_splits(datasets, cfg.data.cap, cfg.data.train_fraction, cfg.data.split_seed);
    if (prepared.train.empty()) throw ConfigError("training split is empty");

    const backends::ModelPool pool(cfg.pool, simulate::build_answer_key(datasets));
    const Environment env(pool, cfg.reward, cfg.episode);
    auto init = policy::PolicyParameters::initialize(cfg.policy_shape(), cfg.ppo.seed);
    auto result = ppo::train(prepared.train, env, std::move(init), cfg.encoder, cfg.ppo, [&](const ppo::MetricsRow& r) {
      io.err << "iter " << r.iter << " reward=" << r.mean_reward << " quality=" << r.mean_quality
             << " cost=" << r.mean_cost << " entropy=" << r.entropy << '\n';
    });

    fs::create_directories(cfg.output_dir);
    const fs::path out_dir(cfg.output_dir);
    policy::save_checkpoint((out_dir / "policy.ckpt").string(), result.params, config::to_json(cfg).dump());
    write_text(out_dir / "train_metrics.csv", ppo::metrics_csv(result.metrics));
    io.out << "wrote " << (out_dir / "policy.ckpt").string() << " and " << (out_dir / "train_metrics.csv").string()
           << '\n';
    return kExitOk;
  });
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint_path, bool, Streams io) {
  return guarded(io, [&] {
    const config::RunConfig cfg = config::load_run_config(config_path);
    const auto params = load_matching(checkpoint_path, cfg);
    const auto datasets = load_all(cfg);
    const auto prepared = simulate::prepare_splits(datasets, cfg.data.cap, cfg.data.train_fraction, cfg.data.split_seed);
    const backends::ModelPool pool(cfg.pool, simulate::build_answer_key(datasets));
    const Environment env(pool, cfg.reward, cfg.episode);

    std::vector<report::ReportRow> rows;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      const std::string tag = fs::path(cfg.data.datasets[d]).stem().string();
      const auto& test = prepared.tests[d];
      const auto router = report::evaluate_router(params, env, cfg.encoder, test, 1, cfg.ppo.seed);
      rows.push_back(report::make_row(tag, "router", router.mean_quality, router.mean_cost, cfg.reward.alpha, test.size()));
      for (std::size_t m = 0; m < pool.size(); ++m) {
        const auto st = report::evaluate_static(m, env, test, 1, cfg.ppo.seed);
        rows.push_back(report::make_row(tag, "static:" + pool.spec(m).name, st.mean_quality, st.mean_cost,
                                        cfg.reward.alpha, test.size()));
      }
    }

    const std::string table = report::format_table(rows);
    fs::create_directories(cfg.output_dir);
    write_text(fs::path(cfg.output_dir) / "eval_report.json",
               json{{"alpha", cfg.reward.alpha}, {"rows", report::rows_to_json(rows)}}.dump(2) + "\n");
    write_text(fs::path(cfg.output_dir) / "eval_report.txt", table);
    io.out << table;
    return kExitOk;
  });
}

int cmd_route(const std::string& checkpoint_path, const std::string& query,
              const std::optional<std::string>& config_path, Streams io) {
  return guarded(io, [&] {
    std::string stored;
    policy::PolicyParameters params = policy::load_checkpoint(checkpoint_path, &stored);
    config::RunConfig cfg;
    if (config_path) {
      cfg = config::load_run_config(*config_path);
    } else {
      const json doc = json::parse(stored, nullptr, false);
      if (doc.is_discarded() || !doc.is_object())
        throw ConfigError("checkpoint carries no run config; pass --config");
      cfg = config::parse_run_config(doc);
    }
    if (!(params.shape() == cfg.policy_shape()))
      throw CheckpointMismatch("checkpoint shape does not match the configured pool, encoder and hop count");

    std::vector<std::vector<data::Example>> datasets;
    for (const auto& p : cfg.data.datasets)
      if (fs::exists(p)) datasets.push_back(data::load_dataset(p));
    const backends::ModelPool pool(cfg.pool, simulate::build_answer_key(datasets));
    const Environment env(pool, cfg.reward, cfg.episode);

    Rng rng(derive_seed(cfg.ppo.seed, {0x726f757465ULL}));
    const Trajectory traj =
        run_episode(query, nullptr, params, env, cfg.encoder, rng, policy::SampleMode::kGreedy);

    json hops = json::array();
    for (const auto& t : traj.transitions) {
      hops.push_back({{"hop", t.state.depth},
                      {"model", t.model_name},
                      {"halt", t.action.halt},
                      {"tokens_in", t.tokens_in},
                      {"tokens_out", t.tokens_out},
                      {"step_cost", t.step_cost},
                      {"cum_cost", t.state.cum_cost + t.step_cost},
                      {"response", t.response}});
    }
    io.out << json{{"query", query},
                   {"final_context", traj.final_state.context},
                   {"total_cost", traj.final_state.cum_cost},
                   {"hops", hops}}
                  .dump(2)
           << '\n';
    return kExitOk;
  });
}

int cmd_simulate(const SimulateOptions& opts, Streams io) {
  return guarded(io, [&] {
    simulate::Scenario scenario =
        opts.scenario_path ? simulate::load_scenario(*opts.scenario_path) : simulate::default_scenario();
    if (opts.deterministic) scenario.ppo.threads = 1;
    if (opts.write_config_dir) {
      simulate::write_scenario_files(scenario, opts.seed, *opts.write_config_dir);
      io.out << "wrote scenario datasets and " << (fs::path(*opts.write_config_dir) / "config.json").string() << '\n';
      return kExitOk;
    }
    const auto summary = simulate::run_simulation(scenario, opts.seed);
    const std::string text = summary.to_json(scenario, opts.seed).dump(2) + "\n";
    if (opts.output_path) write_text(*opts.output_path, text);
    io.out << text;
    return kExitOk;
  });
}

}  // namespace hoprouter::commands
