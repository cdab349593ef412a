#include "tomcat/exp/experiments.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tomcat/core/stats.hpp"
#include "tomcat/exp/plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tomcat {

namespace {

struct TeamDraw {
  std::string tomcat_profile;
  std::string opponent_profile;
};

TeamDraw draw_team(const Dataset& data, Rng& rng) {
  auto keys = data.team_keys();
  const std::string& key = keys[rng.uniform_int(static_cast<int>(keys.size()))];
  const auto& trajs = data.groups().at(key);
  int slot = rng.uniform_int(2);
  return {trajs[0].profiles[slot], trajs[0].profiles[1 - slot]};
}

struct ConditionOutcome {
  std::vector<double> task, indiv, plan;
  std::vector<std::vector<double>> traces;
};

ResultRow summarize(const ExperimentConfig& cfg, const std::string& condition,
                    const ConditionOutcome& out) {
  ResultRow row;
  row.experiment = cfg.id;
  row.condition = condition;
  row.episodes = static_cast<int>(out.task.size());
  row.seed = cfg.seed;
  row.task_mean = mean_of(out.task);
  row.task_ci = ci95_halfwidth(out.task);
  row.indiv_mean = mean_of(out.indiv);
  row.indiv_ci = ci95_halfwidth(out.indiv);
  if (!out.plan.empty()) {
    row.plan_mean = mean_of(out.plan);
    row.plan_ci = ci95_halfwidth(out.plan);
  }
  return row;
}

void write_trace_csv(const std::string& path, const std::vector<std::vector<double>>& traces) {
  if (traces.empty()) return;
  size_t T = 0;
  for (const auto& tr : traces) T = std::max(T, tr.size());
  std::ofstream out(path);
  out << "t,mean_true_profile_prob,episodes\n";
  for (size_t t = 0; t < T; ++t) {
    double sum = 0;
    int n = 0;
    for (const auto& tr : traces)
      if (t < tr.size()) {
        sum += tr[t];
        ++n;
      }
    if (n > 0) out << t << "," << sum / n << "," << n << "\n";
  }
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.dataset_dir.empty()) throw std::invalid_argument("run_experiment: dataset_dir not set");
  Dataset data = load_dataset(cfg.dataset_dir);
  GridLayout layout = parse_layout(data.layout_text);

  std::optional<ToMnet> tomnet;
  if (!cfg.tomnet_path.empty()) tomnet.emplace(load_tomnet(cfg.tomnet_path));

  // Row labels that spell a canonical condition-set descriptor must match
  // the checkpoint's trained conditions.
  auto load_row_model = [&](const std::string& label, const std::string& path) {
    if (!fs::exists(path))
      throw std::runtime_error("run_experiment: missing checkpoint " + path);
    MadiffModel model = load_madiff(path);
    bool label_is_descriptor = true;
    ConditionSet want;
    try {
      want = ConditionSet::parse(label);
    } catch (const std::exception&) {
      label_is_descriptor = false;
    }
    if (label_is_descriptor && !(want == model.cfg.conditions))
      throw std::runtime_error("run_experiment: condition set mismatch: row '" + label +
                               "' vs checkpoint trained with '" +
                               model.cfg.conditions.descriptor() + "' (" + path + ")");
    return model;
  };

  std::map<std::string, PolicyPtr> scripted_cache;
  auto scripted_for = [&](const std::string& name) {
    auto it = scripted_cache.find(name);
    if (it != scripted_cache.end()) return it->second;
    PolicyPtr p = scripted_policy(profile_by_name(name), layout, cfg.scripted_gain);
    scripted_cache[name] = p;
    return p;
  };

  std::vector<ResultRow> rows;
  std::vector<std::vector<double>> all_traces;

  // Shared episode loop: builds both agents per episode via the factory.
  auto run_condition = [&](const std::string& condition,
                           const std::function<std::pair<std::unique_ptr<Agent>,
                                                         std::unique_ptr<Agent>>(
                               const TeamDraw&, uint64_t)>& make_agents,
                           bool collect_traces) {
    ConditionOutcome out;
    Rng rng(hash_combine(cfg.seed, hash_string(condition.c_str())));
    for (int e = 0; e < cfg.episodes; ++e) {
      uint64_t ep_seed = hash_combine(cfg.seed, hash_combine(hash_string(condition.c_str()), e));
      TeamDraw draw = draw_team(data, rng);
      auto [a, b] = make_agents(draw, ep_seed);
      auto [metrics, traj] = run_episode(*a, *b, layout, cfg.T, ep_seed);
      out.task.push_back(metrics.task_reward);
      out.indiv.push_back(metrics.individual[0]);
      if (metrics.plan_count[0] > 0) out.plan.push_back(metrics.plan_count[0]);
      if (collect_traces && !metrics.profile_prob_trace.empty())
        out.traces.push_back(metrics.profile_prob_trace);
    }
    rows.push_back(summarize(cfg, condition, out));
    for (auto& tr : out.traces) all_traces.push_back(std::move(tr));
  };

  auto make_tomcat = [&](const MadiffModel& model, const TeamDraw& draw, ReplanPolicy replan,
                         AgentRuntime::Mode mode) {
    TomcatModels models{&model, tomnet ? &*tomnet : nullptr, &layout};
    auto agent = std::make_unique<TomcatAgent>(profile_by_name(draw.tomcat_profile), models,
                                               replan, mode);
    agent->set_prior_source(&data, mode == AgentRuntime::Mode::Unknown ? 0 : cfg.n_past);
    agent->set_opponent(draw.opponent_profile);
    return agent;
  };
  auto make_opponent = [&](const TeamDraw& draw) {
    return std::make_unique<PolicyAgent>(scripted_for(draw.opponent_profile),
                                         profile_by_name(draw.opponent_profile),
                                         cfg.opponent_temperature);
  };

  if (cfg.id == "replanning") {
    if (cfg.madiff_rows.empty())
      throw std::invalid_argument("replanning experiment needs one madiff checkpoint");
    MadiffModel model = load_row_model(cfg.madiff_rows[0].first, cfg.madiff_rows[0].second);
    const std::vector<std::pair<std::string, ReplanPolicy>> schemes = {
        {"always", ReplanPolicy::always()},
        {std::to_string(cfg.every_n) + "_steps", ReplanPolicy::every(cfg.every_n)},
        {"horizon", ReplanPolicy::horizon()},
        {"dynamic", ReplanPolicy::dynamic(cfg.dynamic_threshold)},
    };
    for (const auto& [name, scheme] : schemes) {
      run_condition(name,
                    [&](const TeamDraw& draw, uint64_t) {
                      return std::pair<std::unique_ptr<Agent>, std::unique_ptr<Agent>>(
                          make_tomcat(model, draw, scheme, AgentRuntime::Mode::Prior),
                          make_opponent(draw));
                    },
                    false);
    }
  } else if (cfg.id == "conditioning_ablation") {
    for (const auto& [label, path] : cfg.madiff_rows) {
      MadiffModel model = load_row_model(label, path);
      run_condition(label,
                    [&](const TeamDraw& draw, uint64_t) {
                      TeamDraw flipped{draw.opponent_profile, draw.tomcat_profile};
                      return std::pair<std::unique_ptr<Agent>, std::unique_ptr<Agent>>(
                          make_tomcat(model, draw, ReplanPolicy::dynamic(cfg.dynamic_threshold),
                                      AgentRuntime::Mode::Prior),
                          make_tomcat(model, flipped,
                                      ReplanPolicy::dynamic(cfg.dynamic_threshold),
                                      AgentRuntime::Mode::Prior));
                    },
                    false);
    }
  } else if (cfg.id == "known_teammates" || cfg.id == "unknown_teammates") {
    const bool unknown = cfg.id == "unknown_teammates";
    const auto mode = unknown ? AgentRuntime::Mode::Unknown : AgentRuntime::Mode::Prior;
    for (const auto& [label, path] : cfg.madiff_rows) {
      MadiffModel model = load_row_model(label, path);
      run_condition(label,
                    [&](const TeamDraw& draw, uint64_t) {
                      return std::pair<std::unique_ptr<Agent>, std::unique_ptr<Agent>>(
                          make_tomcat(model, draw, ReplanPolicy::dynamic(cfg.dynamic_threshold),
                                      mode),
                          make_opponent(draw));
                    },
                    unknown);
    }
    run_condition(unknown ? "rl_unknown" : "rl_known",
                  [&](const TeamDraw& draw, uint64_t) {
                    return std::pair<std::unique_ptr<Agent>, std::unique_ptr<Agent>>(
                        std::make_unique<PolicyAgent>(scripted_for(draw.tomcat_profile),
                                                      profile_by_name(draw.tomcat_profile),
                                                      cfg.opponent_temperature),
                        make_opponent(draw));
                  },
                  false);
  } else {
    throw std::invalid_argument("run_experiment: unknown experiment id '" + cfg.id + "'");
  }

  fs::create_directories(cfg.out_dir);
  write_results_csv((fs::path(cfg.out_dir) / (cfg.id + ".csv")).string(), rows);
  write_run_manifest((fs::path(cfg.out_dir) / (cfg.id + "_manifest.json")).string(), cfg, rows);
  plot_results((fs::path(cfg.out_dir) / (cfg.id + ".png")).string(), rows, cfg.id);
  if (!all_traces.empty())
    write_trace_csv((fs::path(cfg.out_dir) / (cfg.id + "_profile_prob.csv")).string(),
                    all_traces);
  return rows;
}

ExperimentConfig experiment_config_from(const Config& file_cfg, const std::string& id,
                                        const std::string& out_dir, uint64_t seed) {
  ExperimentConfig cfg;
  cfg.id = id;
  cfg.out_dir = out_dir;
  cfg.seed = seed;
  cfg.episodes = file_cfg.get_int("exp.episodes", 50);
  cfg.T = file_cfg.get_int("exp.T", 200);
  cfg.dataset_dir = file_cfg.get_str("exp.dataset", "");
  cfg.tomnet_path = file_cfg.get_str("exp.tomnet", "");
  cfg.dynamic_threshold = file_cfg.get_double("replan.threshold", 0.2);
  cfg.every_n = file_cfg.get_int("replan.every_n", 10);
  cfg.n_past = file_cfg.get_int("exp.n_past", 4);
  cfg.opponent_temperature = file_cfg.get_double("exp.opponent_temperature", 0.3);
  cfg.scripted_gain = file_cfg.get_double("policy.gain", 1.5);
  for (const std::string& row : file_cfg.get_list("exp.madiff_rows")) {
    size_t colon = row.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("exp.madiff_rows entries must be label:path");
    cfg.madiff_rows.emplace_back(row.substr(0, colon), row.substr(colon + 1));
  }
  return cfg;
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("results: cannot write " + path);
  out << "experiment,condition,episodes,seed,task_mean,task_ci95,indiv_mean,indiv_ci95,"
         "plan_mean,plan_ci95\n";
  for (const ResultRow& r : rows) {
    out << r.experiment << "," << r.condition << "," << r.episodes << "," << r.seed << ","
        << r.task_mean << "," << r.task_ci << "," << r.indiv_mean << "," << r.indiv_ci << ","
        << r.plan_mean << "," << r.plan_ci << "\n";
  }
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("results: cannot open " + path);
  std::vector<ResultRow> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ResultRow r;
    std::string tok;
    std::getline(ls, r.experiment, ',');
    std::getline(ls, r.condition, ',');
    std::getline(ls, tok, ',');
    r.episodes = std::stoi(tok);
    std::getline(ls, tok, ',');
    r.seed = std::stoull(tok);
    std::getline(ls, tok, ',');
    r.task_mean = std::stod(tok);
    std::getline(ls, tok, ',');
    r.task_ci = std::stod(tok);
    std::getline(ls, tok, ',');
    r.indiv_mean = std::stod(tok);
    std::getline(ls, tok, ',');
    r.indiv_ci = std::stod(tok);
    std::getline(ls, tok, ',');
    r.plan_mean = std::stod(tok);
    std::getline(ls, tok, ',');
    r.plan_ci = std::stod(tok);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_run_manifest(const std::string& path, const ExperimentConfig& cfg,
                        const std::vector<ResultRow>& rows) {
  json j;
  j["experiment"] = cfg.id;
  j["episodes"] = cfg.episodes;
  j["T"] = cfg.T;
  j["seed"] = cfg.seed;
  j["dataset"] = cfg.dataset_dir;
  j["tomnet"] = cfg.tomnet_path;
  json jrows = json::array();
  for (const auto& [label, p] : cfg.madiff_rows) {
    std::string descriptor;
    if (fs::exists(p)) descriptor = load_madiff(p).cfg.conditions.descriptor();
    jrows.push_back({{"label", label}, {"path", p}, {"conditions", descriptor}});
  }
  j["madiff_rows"] = jrows;
  json jres = json::array();
  for (const ResultRow& r : rows)
    jres.push_back({{"condition", r.condition},
                    {"episodes", r.episodes},
                    {"task_mean", r.task_mean},
                    {"task_ci95", r.task_ci},
                    {"indiv_mean", r.indiv_mean},
                    {"indiv_ci95", r.indiv_ci},
                    {"plan_mean", r.plan_mean},
                    {"plan_ci95", r.plan_ci}});
  j["results"] = jres;
  std::ofstream(path) << j.dump(2) << "\n";
}

void plot_results(const std::string& png_path, const std::vector<ResultRow>& rows,
                  const std::string& title) {
  PlotSeries task{"TASK", {}, {}, {255, 99, 71}, {}};
  PlotSeries indiv{"INDIV", {}, {}, {65, 105, 225}, {}};
  PlotSeries plan{"PLANS", {}, {}, {34, 139, 34}, {}};
  std::vector<std::string> labels;
  for (size_t i = 0; i < rows.size(); ++i) {
    labels.push_back(rows[i].condition);
    task.x.push_back(static_cast<double>(i));
    task.y.push_back(rows[i].task_mean);
    task.err.push_back(rows[i].task_ci);
    indiv.x.push_back(static_cast<double>(i));
    indiv.y.push_back(rows[i].indiv_mean);
    indiv.err.push_back(rows[i].indiv_ci);
    if (rows[i].plan_mean > 0) {
      plan.x.push_back(static_cast<double>(i));
      plan.y.push_back(rows[i].plan_mean);
      plan.err.push_back(rows[i].plan_ci);
    }
  }
  std::vector<PlotSeries> series = {task, indiv};
  if (!plan.x.empty()) series.push_back(plan);
  render_line_plot(png_path, series, title, labels);
}

}  // namespace tomcat
