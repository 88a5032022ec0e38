#include "fedrank/run_config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>

#include "fedrank/error.hpp"
#include "fedrank/text_format.hpp"

namespace fedrank::cli {

namespace {

std::size_t to_size(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size()) {
    throw UsageError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return out;
}

double to_real(const std::string& key, const std::string& value) {
  if (value.empty()) throw UsageError(key + ": empty value");
  char* end = nullptr;
  errno = 0;
  const double out = std::strtod(value.c_str(), &end);
  if (errno != 0 || end != value.c_str() + value.size()) {
    throw UsageError(key + ": expected a number, got '" + value + "'");
  }
  return out;
}

std::vector<metrics::MetricSpec> to_metrics(const std::string& value) {
  std::vector<metrics::MetricSpec> out;
  for (auto part : text::split(value, ',')) {
    auto t = text::trim(part);
    if (!t.empty()) out.push_back(metrics::parse_metric(std::string(t)));
  }
  if (out.empty()) throw UsageError("metrics: empty list");
  return out;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "dataset",     "embeddings", "learning_rate", "epochs",     "seed",
      "dropout",     "lambda",     "top_n",         "folds",      "layers",
      "hidden_dim",  "output_dim", "activation",    "aggregator", "loss_reduction",
      "alpha",       "inference_qr", "patience",  "gain",          "metrics"};
  return keys;
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  auto& t = config.train;
  if (key == "dataset") {
    config.dataset = value;
  } else if (key == "embeddings") {
    config.embeddings = value;
  } else if (key == "learning_rate") {
    t.learning_rate = to_real(key, value);
  } else if (key == "epochs") {
    t.epochs = to_size(key, value);
  } else if (key == "seed") {
    t.seed = to_size(key, value);
  } else if (key == "dropout") {
    t.dropout_p = to_real(key, value);
  } else if (key == "lambda") {
    t.lambda = to_real(key, value);
  } else if (key == "top_n") {
    t.top_n = to_size(key, value);
  } else if (key == "folds") {
    t.folds = to_size(key, value);
  } else if (key == "layers") {
    t.num_layers = to_size(key, value);
  } else if (key == "hidden_dim") {
    t.hidden_dim = to_size(key, value);
  } else if (key == "output_dim") {
    t.output_dim = to_size(key, value);
  } else if (key == "activation") {
    t.activation = rgcn::parse_activation(value);
  } else if (key == "aggregator") {
    t.aggregator = rgcn::parse_aggregator(value);
  } else if (key == "loss_reduction") {
    if (value == "sum") {
      t.reduction = tensor::Reduction::sum;
    } else if (value == "mean") {
      t.reduction = tensor::Reduction::mean;
    } else {
      throw UsageError("loss_reduction: expected sum or mean, got '" + value + "'");
    }
  } else if (key == "alpha") {
    if (value == "auto") {
      t.alpha_mode = graph::AlphaMode::auto_max;
    } else {
      t.alpha_mode = graph::AlphaMode::fixed;
      t.alpha = to_real(key, value);
    }
  } else if (key == "inference_qr") {
    if (value == "unit") {
      t.inference_qr = training::InferenceQr::unit;
    } else if (value == "mean") {
      t.inference_qr = training::InferenceQr::mean;
    } else {
      throw UsageError("inference_qr: expected unit or mean, got '" + value + "'");
    }
  } else if (key == "patience") {
    t.patience = to_size(key, value);
  } else if (key == "gain") {
    if (value == "exponential") {
      t.gain = metrics::Gain::exponential;
    } else if (value == "linear") {
      t.gain = metrics::Gain::linear;
    } else {
      throw UsageError("gain: expected exponential or linear, got '" + value + "'");
    }
  } else if (key == "metrics") {
    t.metrics = to_metrics(value);
  } else {
    throw UsageError("unknown configuration key '" + key + "'");
  }
}

void apply_config_text(RunConfig& config, std::istream& in) {
  std::string line;
  std::size_t number = 0;
  while (text::next_line(in, line)) {
    ++number;
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos) {
      body = body.substr(0, hash);
    }
    body = text::trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key(text::trim(body.substr(0, eq)));
    const std::string value(text::trim(body.substr(eq + 1)));
    try {
      apply_setting(config, key, value);
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
}

bool seed_from_environment(RunConfig& config) {
  const char* env = std::getenv("FEDRANK_SEED");
  if (env == nullptr || *env == '\0') return false;
  apply_setting(config, "seed", env);
  return true;
}

std::string RunConfig::to_manifest() const {
  return "dataset = " + dataset + "\n" + "embeddings = " +
         (embeddings.empty() ? dataset : embeddings) + "\n" + train.to_manifest();
}

}  // namespace fedrank::cli
