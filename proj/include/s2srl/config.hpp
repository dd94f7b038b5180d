#pragma once

#include <string>
#include <vector>

#include "s2srl/pipeline.hpp"

namespace CLI {
class App;
}

namespace s2srl {

/// Everything a subcommand can be configured with. Config-file keys and
/// command-line flags share one name table (`hidden_dim=64` / `--hidden_dim 64`).
struct RunConfig {
  PipelineConfig pipeline;
  std::string workdir = ".";
  std::string out;     // empty: the subcommand's default file in workdir
  std::string corpus;  // empty: workdir/corpus.txt
  std::string model;   // chat / simulate; empty: workdir/rl.ckpt
  std::vector<std::string> models;  // eval; empty: every stage checkpoint present
  std::string input;   // chat script; empty: stdin
  std::size_t n_episodes = 0;  // simulate; 0: every test input
  bool show_rewards = false;
  std::string log;     // rl-train log; empty: workdir/rl_log.tsv

  void validate() const;
};

/// Registers every RunConfig field as a long option on `app` plus `--config`
/// for a key=value file. Unknown keys in the file are rejected at parse time.
void register_run_options(CLI::App& app, RunConfig& cfg);

/// Effective configuration as sorted key=value lines.
std::string effective_config(const RunConfig& cfg);

std::string to_string(CandidateSelection s);
std::string to_string(SimplicityNormalizer n);

}  // namespace s2srl
