#pragma once

#include <functional>

#include "tomcat/core/config.hpp"
#include "tomcat/exp/harness.hpp"

namespace tomcat {

struct ExperimentConfig {
  std::string id;  // conditioning_ablation | replanning | known_teammates | unknown_teammates
  int episodes = 50;
  int T = 200;
  uint64_t seed = 0;
  std::string out_dir = ".";
  std::string dataset_dir;
  std::string tomnet_path;
  // condition label -> madiff checkpoint path, in row order
  std::vector<std::pair<std::string, std::string>> madiff_rows;
  double dynamic_threshold = 0.2;
  int every_n = 10;
  int n_past = 4;
  double opponent_temperature = 0.3;
  double scripted_gain = 1.5;
};

struct ResultRow {
  std::string experiment;
  std::string condition;
  int episodes = 0;
  uint64_t seed = 0;
  double task_mean = 0, task_ci = 0;
  double indiv_mean = 0, indiv_ci = 0;
  double plan_mean = 0, plan_ci = 0;
};

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

ExperimentConfig experiment_config_from(const Config& file_cfg, const std::string& id,
                                        const std::string& out_dir, uint64_t seed);

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::string& path);
void write_run_manifest(const std::string& path, const ExperimentConfig& cfg,
                        const std::vector<ResultRow>& rows);

// Renders mean +/- CI per condition for the three metric columns.
void plot_results(const std::string& png_path, const std::vector<ResultRow>& rows,
                  const std::string& title);

}  // namespace tomcat
