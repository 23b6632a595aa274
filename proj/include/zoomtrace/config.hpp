#pragma once

// Run configuration: built-in defaults, a key = value text file, and command
// line overrides applied in that order.
//
// File format: one "key = value" per line, '#' starts a comment, blank lines
// are ignored. Keys are listed by config_keys().

#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "zoomtrace/agent.hpp"
#include "zoomtrace/backend.hpp"

namespace zt::config {

struct ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

using KeyValues = std::map<std::string, std::string>;

// Throws ConfigError naming the offending line.
KeyValues parse_key_values(std::istream& in, const std::string& source = "<config>");
KeyValues read_key_values(const std::string& path);

struct RunConfig {
  std::string scene;
  std::string question;
  std::string backend = "heuristic";  // heuristic | remote | replay:<file>
  std::string out = "out";
  std::string gt;  // optional ground-truth annotation file
  int group = 1;
  agent::EpisodeConfig episode;
  agent::RemoteOptions remote;
  bool shuffle = false;  // heuristic quadrant order
};

// Keys accepted by apply(), with a one-line description each.
const std::vector<std::pair<std::string, std::string>>& config_keys();

// Unknown keys and malformed values throw ConfigError.
void apply(RunConfig& c, const KeyValues& kv);
// Weights only (w1..w4, alpha, beta, gamma_fmt, gamma_plan, lambda_c, lambda_g).
void apply_weights(reward::RewardWeights& w, const KeyValues& kv);

// "w1=0.1,alpha=1" or a path to a key = value file.
reward::RewardWeights parse_weights(const std::string& spec, reward::RewardWeights base = {});

void validate(const RunConfig& c);

}  // namespace zt::config
