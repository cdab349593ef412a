#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tomcat/exp/experiments.hpp"
#include "tomcat/policy/pg_trainer.hpp"

namespace fs = std::filesystem;
using namespace tomcat;

namespace {

Config load_cfg(const std::string& path) {
  return path.empty() ? Config() : Config::from_file(path);
}

GridLayout layout_from_cfg(const Config& cfg) {
  std::string path = cfg.get_str("env.layout", "");
  if (path.empty()) return default_layout();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open layout file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_layout(ss.str());
}

std::vector<std::string> profiles_from_cfg(const Config& cfg) {
  auto list = cfg.get_list("data.profiles");
  if (list.empty())
    for (const AgentProfile& p : builtin_profiles()) list.push_back(p.name);
  return list;
}

std::vector<std::pair<std::string, std::string>> team_pairs(const std::vector<std::string>& ps) {
  std::vector<std::pair<std::string, std::string>> teams;
  for (size_t i = 0; i < ps.size(); ++i)
    for (size_t j = i + 1; j < ps.size(); ++j) teams.emplace_back(ps[i], ps[j]);
  return teams;
}

void write_loss_csv(const std::string& path, const std::vector<double>& train,
                    const std::vector<double>& val) {
  std::ofstream out(path);
  out << "epoch,train_loss,val_loss\n";
  for (size_t i = 0; i < train.size(); ++i)
    out << i << "," << train[i] << "," << (i < val.size() ? val[i] : 0.0) << "\n";
}

int cmd_gen_data(const Config& cfg, uint64_t seed, const std::string& out_dir) {
  GridLayout layout = layout_from_cfg(cfg);
  auto profiles = profiles_from_cfg(cfg);
  Dataset ds = generate_dataset(layout, team_pairs(profiles),
                                cfg.get_int("data.episodes_per_team", 70),
                                cfg.get_int("data.T", 200),
                                cfg.get_double("data.temperature", 0.3), seed,
                                cfg.get_double("policy.gain", 1.5));
  std::string dir = (fs::path(out_dir) / "dataset").string();
  save_dataset(dir, ds);
  const auto& first = ds.groups().begin()->second[0];
  export_trajectory_csv((fs::path(out_dir) / "sample_trajectory.csv").string(), first);
  std::cout << "dataset: " << ds.size() << " trajectories, " << ds.team_keys().size()
            << " teams -> " << dir << "\n";
  return 0;
}

std::vector<ToMExample> build_examples(const Dataset& ds, const ToMnetConfig& tc,
                                       int per_profile, uint64_t seed) {
  std::vector<ToMExample> out;
  std::vector<std::string> profiles;
  for (const auto& [key, trajs] : ds.groups()) {
    (void)key;
    for (int s = 0; s < 2; ++s) {
      const std::string& name = trajs[0].profiles[s];
      if (std::find(profiles.begin(), profiles.end(), name) == profiles.end())
        profiles.push_back(name);
    }
  }
  for (const std::string& name : profiles) {
    Rng rng(hash_combine(seed, hash_string(name.c_str())));
    for (int i = 0; i < per_profile; ++i)
      out.push_back(build_training_example(ds, name, tc, rng));
  }
  return out;
}

ToMnetConfig tomnet_cfg_from(const Config& cfg) {
  ToMnetConfig tc;
  tc.lstm_hidden = cfg.get_int("tomnet.lstm_hidden", 64);
  tc.head_hidden = cfg.get_int("tomnet.head_hidden", 64);
  tc.dropout = cfg.get_double("tomnet.dropout", 0.2);
  tc.n_past = cfg.get_int("tomnet.n_past", 4);
  tc.t_past = cfg.get_int("tomnet.t_past", 100);
  tc.t_cur = cfg.get_int("tomnet.t_cur", 10);
  tc.sr_gamma = cfg.get_double("tomnet.sr_gamma", 0.99);
  return tc;
}

int cmd_train_tomnet(const Config& cfg, uint64_t seed, const std::string& out_dir) {
  Dataset ds = load_dataset(cfg.get_str("exp.dataset", (fs::path(out_dir) / "dataset").string()));
  ToMnetConfig tc = tomnet_cfg_from(cfg);
  auto examples = build_examples(ds, tc, cfg.get_int("tomnet.examples_per_profile", 300),
                                 hash_combine(seed, 0xeb));
  ToMnet model(tc, seed);
  ToMTrainConfig train_cfg;
  train_cfg.lr = cfg.get_double("tomnet.lr", 5e-4);
  train_cfg.weight_decay = cfg.get_double("tomnet.weight_decay", 5e-4);
  train_cfg.batch = cfg.get_int("tomnet.batch", 128);
  train_cfg.max_epochs = cfg.get_int("tomnet.max_epochs", 2000);
  train_cfg.patience = cfg.get_int("tomnet.patience", 10);
  train_cfg.tolerance = cfg.get_double("tomnet.tolerance", 0.01);
  train_cfg.seed = seed;
  ToMTrainLog log = train_tomnet(model, examples, train_cfg);
  std::string path = (fs::path(out_dir) / "tomnet.bin").string();
  save_tomnet(path, model);
  write_loss_csv((fs::path(out_dir) / "tomnet_loss.csv").string(), log.train_loss, log.val_loss);
  std::cout << "tomnet: " << examples.size() << " examples, " << log.epochs_run
            << " epochs, best val loss " << log.best_val << " -> " << path << "\n";
  return 0;
}

int cmd_augment(const Config& cfg, uint64_t seed, const std::string& out_dir) {
  Dataset ds = load_dataset(cfg.get_str("exp.dataset", (fs::path(out_dir) / "dataset").string()));
  ToMnet tomnet =
      load_tomnet(cfg.get_str("exp.tomnet", (fs::path(out_dir) / "tomnet.bin").string()));
  AugDataset aug = augment_dataset(ds, tomnet, cfg.get_int("tomnet.n_past", 4),
                                   cfg.get_double("madiff.returns_gamma", 0.99), seed);
  std::string path = (fs::path(out_dir) / "augmented.bin").string();
  save_augmented(path, aug);
  std::cout << "augmented: " << aug.trajs.size() << " trajectories -> " << path << "\n";
  return 0;
}

MadiffConfig madiff_cfg_from(const Config& cfg) {
  MadiffConfig mc;
  mc.history = cfg.get_int("madiff.history", 16);
  mc.horizon = cfg.get_int("madiff.horizon", 64);
  mc.diffusion_steps = cfg.get_int("madiff.diffusion_steps", 200);
  mc.schedule_kind = cfg.get_str("madiff.schedule", "cosine");
  mc.emb = cfg.get_int("madiff.emb", 128);
  mc.hidden = cfg.get_int("madiff.hidden", 256);
  mc.kernel = cfg.get_int("madiff.kernel", 5);
  mc.conv_layers = cfg.get_int("madiff.conv_layers", 2);
  mc.invdyn_hidden = cfg.get_int("madiff.invdyn_hidden", 128);
  mc.p_drop = cfg.get_double("madiff.p_drop", 0.25);
  mc.guidance_w = cfg.get_double("guidance.w", 1.2);
  mc.ddim_steps = cfg.get_int("sampler.steps", 15);
  mc.returns_gamma = cfg.get_double("madiff.returns_gamma", 0.99);
  mc.returns_target = cfg.get_double("madiff.returns_target", 1.0);
  mc.conditions = ConditionSet::parse(cfg.get_str("madiff.conditions", "none"));
  return mc;
}

int cmd_train_madiff(const Config& cfg, uint64_t seed, const std::string& out_dir) {
  Dataset ds = load_dataset(cfg.get_str("exp.dataset", (fs::path(out_dir) / "dataset").string()));
  AugDataset aug = load_augmented(
      cfg.get_str("exp.augmented", (fs::path(out_dir) / "augmented.bin").string()), ds);
  MadiffConfig mc = madiff_cfg_from(cfg);
  MadiffModel model(mc, seed);
  MadiffTrainConfig tc;
  tc.steps = cfg.get_int("madiff.steps", 2000);
  tc.batch = cfg.get_int("madiff.batch", 32);
  tc.lr = cfg.get_double("madiff.lr", 2e-4);
  tc.seed = seed;
  MadiffTrainLog log = train_madiff(model, aug, tc);
  std::string name = cfg.get_str("madiff.name", "madiff_" + mc.conditions.descriptor());
  std::string path = (fs::path(out_dir) / (name + ".bin")).string();
  save_madiff(path, model);
  std::ofstream loss_csv((fs::path(out_dir) / (name + "_loss.csv")).string());
  loss_csv << "step,loss\n";
  for (size_t i = 0; i < log.step_loss.size(); ++i) loss_csv << i << "," << log.step_loss[i] << "\n";
  std::cout << "madiff[" << mc.conditions.descriptor() << "]: " << tc.steps << " steps, final "
            << (log.loss.empty() ? 0.0 : log.loss.back()) << " -> " << path << "\n";
  return 0;
}

int cmd_eval_tomnet(const Config& cfg, uint64_t seed, const std::string& out_dir) {
  Dataset ds = load_dataset(cfg.get_str("eval.dataset", (fs::path(out_dir) / "dataset").string()));
  ToMnet model =
      load_tomnet(cfg.get_str("exp.tomnet", (fs::path(out_dir) / "tomnet.bin").string()));
  auto parse_ints = [&](const std::string& key, std::vector<int> fallback) {
    auto list = cfg.get_list(key);
    if (list.empty()) return fallback;
    std::vector<int> out;
    for (const auto& s : list) out.push_back(std::stoi(s));
    return out;
  };
  auto n_past_list = parse_ints("eval.n_past", {0, 1, 2, 4});
  auto t_past_list = parse_ints("eval.t_past", {model.cfg.t_past});
  auto t_cur_list = parse_ints("eval.t_cur", {model.cfg.t_cur});
  const int per_profile = cfg.get_int("eval.examples_per_profile", 100);

  std::string path = (fs::path(out_dir) / "tomnet_eval.csv").string();
  std::ofstream out(path);
  out << "n_past,t_past,t_cur,examples,action_accuracy,sign_accuracy,true_profile_prob\n";
  for (int np : n_past_list)
    for (int tp : t_past_list)
      for (int tcur : t_cur_list) {
        ToMnetConfig ec = model.cfg;
        ec.n_past = np;
        ec.t_past = tp;
        ec.t_cur = tcur;
        auto examples = build_examples(ds, ec, per_profile, hash_combine(seed, np * 1000 + tp));
        ToMEvalResult r = eval_tomnet(model, examples);
        out << np << "," << tp << "," << tcur << "," << r.examples << "," << r.action_accuracy
            << "," << r.sign_accuracy << "," << r.true_profile_prob << "\n";
      }
  std::cout << "tomnet eval -> " << path << "\n";
  return 0;
}

int cmd_run_exp(const Config& cfg, uint64_t seed, const std::string& out_dir,
                const std::string& id) {
  Config merged = cfg;
  if (!merged.has("exp.dataset"))
    merged.set("exp.dataset", (fs::path(out_dir) / "dataset").string());
  if (!merged.has("exp.tomnet") && fs::exists(fs::path(out_dir) / "tomnet.bin"))
    merged.set("exp.tomnet", (fs::path(out_dir) / "tomnet.bin").string());
  ExperimentConfig ec = experiment_config_from(merged, id, out_dir, seed);
  if (ec.madiff_rows.empty()) {
    // default to checkpoints found in the out dir
    for (const auto& e : fs::directory_iterator(out_dir)) {
      std::string name = e.path().filename().string();
      if (name.rfind("madiff_", 0) == 0 && e.path().extension() == ".bin")
        ec.madiff_rows.emplace_back(name.substr(7, name.size() - 11), e.path().string());
    }
    std::sort(ec.madiff_rows.begin(), ec.madiff_rows.end());
  }
  auto rows = run_experiment(ec);
  for (const ResultRow& r : rows)
    std::cout << r.experiment << "/" << r.condition << ": task " << r.task_mean << " +- "
              << r.task_ci << ", indiv " << r.indiv_mean << " +- " << r.indiv_ci << ", plans "
              << r.plan_mean << "\n";
  return 0;
}

int cmd_report(const std::string& out_dir) {
  bool found = false;
  for (const auto& e : fs::directory_iterator(out_dir)) {
    if (e.path().extension() != ".csv") continue;
    std::string stem = e.path().stem().string();
    if (stem != "replanning" && stem != "conditioning_ablation" && stem != "known_teammates" &&
        stem != "unknown_teammates")
      continue;
    found = true;
    auto rows = read_results_csv(e.path().string());
    plot_results((fs::path(out_dir) / (stem + ".png")).string(), rows, stem);
    std::cout << "== " << stem << " (" << (rows.empty() ? 0 : rows[0].episodes)
              << " episodes) ==\n";
    for (const ResultRow& r : rows) {
      std::printf("  %-22s task %8.2f +-%6.2f  indiv %9.2f +-%6.2f  plans %7.2f\n",
                  r.condition.c_str(), r.task_mean, r.task_ci, r.indiv_mean, r.indiv_ci,
                  r.plan_mean);
    }
  }
  if (!found) std::cout << "no experiment CSVs under " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ToMCAT: theory-of-mind conditioned diffusion planning in a cooking gridworld"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  uint64_t seed = 0;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--seed", seed, "global random seed");
  app.add_option("--out-dir", out_dir, "artifact directory");

  app.add_subcommand("gen-data", "roll out the offline dataset");
  app.add_subcommand("train-tomnet", "train the theory-of-mind network");
  app.add_subcommand("augment", "attach ToM embeddings and returns to the dataset");
  app.add_subcommand("train-madiff", "train the diffusion planner");
  app.add_subcommand("eval-tomnet", "sweep prediction metrics over past/current window sizes");
  auto* run = app.add_subcommand("run-exp", "run an experiment protocol");
  std::string exp_id = "replanning";
  run->add_option("id", exp_id,
                  "conditioning_ablation | replanning | known_teammates | unknown_teammates");
  app.add_subcommand("report", "summarize result CSVs and re-render plots");

  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(out_dir);
    Config cfg = load_cfg(config_path);
    if (cfg.has("seed") && seed == 0) seed = static_cast<uint64_t>(cfg.get_int("seed", 0));
    if (app.got_subcommand("gen-data")) return cmd_gen_data(cfg, seed, out_dir);
    if (app.got_subcommand("train-tomnet")) return cmd_train_tomnet(cfg, seed, out_dir);
    if (app.got_subcommand("augment")) return cmd_augment(cfg, seed, out_dir);
    if (app.got_subcommand("train-madiff")) return cmd_train_madiff(cfg, seed, out_dir);
    if (app.got_subcommand("eval-tomnet")) return cmd_eval_tomnet(cfg, seed, out_dir);
    if (app.got_subcommand("run-exp")) return cmd_run_exp(cfg, seed, out_dir, exp_id);
    if (app.got_subcommand("report")) return cmd_report(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
