#pragma once

// Effective settings of a CLI run: training and graph parameters plus input
// paths, read from `key = value` files and overridden by flags.

#include <istream>
#include <string>
#include <vector>

#include "fedrank/training.hpp"

namespace fedrank::cli {

struct RunConfig {
  training::TrainConfig train;
  std::string dataset;     // dataset directory
  std::string embeddings;  // directory holding queries.emb / docs.emb; defaults to dataset

  // Every effective value, one `key = value` line each, fixed order.
  std::string to_manifest() const;
};

// Keys accepted by apply_setting, in manifest order.
const std::vector<std::string>& config_keys();

// Parses and stores one setting. Throws UsageError for an unknown key or a
// value that does not parse.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

// `key = value` lines; `#` starts a comment, blank lines are ignored. Errors
// carry the line number.
void apply_config_text(RunConfig& config, std::istream& in);

// Seed from FEDRANK_SEED when set and well-formed; throws UsageError when it
// is set but not an unsigned integer.
bool seed_from_environment(RunConfig& config);

}  // namespace fedrank::cli
