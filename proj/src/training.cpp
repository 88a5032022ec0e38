#include "fedrank/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "fedrank/error.hpp"
#include "fedrank/random.hpp"
#include "fedrank/text_format.hpp"

namespace fedrank::training {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
  if (epochs == 0) throw UsageError("epochs must be at least 1");
  if (folds < 2) throw UsageError("folds must be at least 2");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw UsageError("dropout must lie in [0, 1)");
  if (metrics.empty()) throw UsageError("at least one metric is required");
  graph_config().validate();
}

rgcn::RgcnConfig TrainConfig::model_config(std::size_t input_dim) const {
  rgcn::RgcnConfig c;
  c.input_dim = input_dim;
  c.hidden_dim = hidden_dim == 0 ? input_dim : hidden_dim;
  c.output_dim = output_dim == 0 ? input_dim : output_dim;
  c.num_layers = num_layers;
  c.activation = activation;
  c.aggregator = aggregator;
  c.dropout_p = dropout_p;
  c.validate();
  return c;
}

graph::GraphConfig TrainConfig::graph_config() const {
  graph::GraphConfig g;
  g.lambda = lambda;
  g.alpha_mode = alpha_mode;
  g.alpha = alpha;
  g.top_n = top_n;
  return g;
}

std::string TrainConfig::to_manifest() const {
  std::ostringstream out;
  out << "learning_rate = " << text::exact(learning_rate) << "\n"
      << "epochs = " << epochs << "\n"
      << "seed = " << seed << "\n"
      << "dropout = " << text::exact(dropout_p) << "\n"
      << "lambda = " << text::exact(lambda) << "\n"
      << "top_n = " << top_n << "\n"
      << "folds = " << folds << "\n"
      << "layers = " << num_layers << "\n"
      << "hidden_dim = " << hidden_dim << "\n"
      << "output_dim = " << output_dim << "\n"
      << "activation = " << rgcn::to_string(activation) << "\n"
      << "aggregator = " << rgcn::to_string(aggregator) << "\n"
      << "loss_reduction = " << (reduction == tensor::Reduction::sum ? "sum" : "mean") << "\n"
      << "alpha = "
      << (alpha_mode == graph::AlphaMode::auto_max ? std::string("auto") : text::exact(alpha))
      << "\n"
      << "inference_qr = " << (inference_qr == InferenceQr::unit ? "unit" : "mean") << "\n"
      << "patience = " << patience << "\n"
      << "gain = " << (gain == metrics::Gain::exponential ? "exponential" : "linear") << "\n"
      << "metrics = ";
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    out << (i ? "," : "") << metrics[i].label();
  }
  out << "\n";
  return out.str();
}

// ---- folds ----------------------------------------------------------------

std::vector<std::string> FoldSplit::training_queries(std::size_t i) const {
  std::vector<std::string> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f == i) continue;
    out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

FoldSplit kfold_split(std::vector<std::string> query_ids, std::size_t k,
                      std::uint64_t seed) {
  if (k < 2) throw UsageError("k-fold split needs k >= 2");
  if (k > query_ids.size()) {
    throw UsageError("cannot split " + std::to_string(query_ids.size()) +
                     " queries into " + std::to_string(k) + " folds");
  }
  std::sort(query_ids.begin(), query_ids.end());
  if (std::adjacent_find(query_ids.begin(), query_ids.end()) != query_ids.end()) {
    throw UsageError("duplicate query id in k-fold split");
  }
  Rng rng(derive_seed(seed, "folds"));
  rng.shuffle(query_ids);
  FoldSplit split;
  split.folds.resize(k);
  for (std::size_t i = 0; i < query_ids.size(); ++i) {
    split.folds[i % k].push_back(query_ids[i]);
  }
  return split;
}

// ---- training -------------------------------------------------------------

std::string TrainReport::loss_tsv() const {
  std::string out = "epoch\tloss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) {
    out += std::to_string(i) + "\t" + text::exact(losses[i]) + "\n";
  }
  return out;
}

namespace {

struct TargetPair {
  std::uint32_t query;
  std::uint32_t resource;
  double target;
};

std::vector<TargetPair> resolve_targets(const graph::HeteroGraph& g,
                                        const graph::QrWeightTable& targets) {
  std::vector<TargetPair> out;
  for (const auto& [key, z] : targets) {
    auto q = g.find(graph::NodeType::query, key.first);
    auto r = g.find(graph::NodeType::resource, key.second);
    if (!q || !r) {
      throw ValidationError("target pair (" + key.first + ", " + key.second +
                            ") is not in the training graph");
    }
    out.push_back({*q, *r, z});
  }
  return out;
}

tensor::Var pair_loss(tensor::Var h, const std::vector<TargetPair>& pairs,
                      tensor::Reduction reduction) {
  std::vector<tensor::Var> preds;
  std::vector<double> targets;
  preds.reserve(pairs.size());
  const auto is_zero = [](const tensor::Var& v) {
    const auto d = v.value().data();
    return std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; });
  };
  for (const auto& p : pairs) {
    auto q = tensor::row(h, p.query);
    auto r = tensor::row(h, p.resource);
    // Both rows dead after the activation: score 0 as ranking does, no gradient.
    preds.push_back(is_zero(q) && is_zero(r) ? h.tape()->constant(tensor::Tensor::scalar(0.0))
                                             : tensor::cosine(q, r));
    targets.push_back(p.target);
  }
  return tensor::mse(preds, targets, reduction);
}

}  // namespace

TrainReport train(const graph::HeteroGraph& g, const graph::QrWeightTable& targets,
                  rgcn::RgcnModel& model, const TrainConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto pairs = resolve_targets(g, targets);
  if (pairs.empty()) throw ValidationError("no training targets");
  const auto messages = rgcn::make_messages(g);
  const tensor::Tensor h0 = g.features();
  auto params = model.parameters();
  tensor::AdamState adam;
  adam.config.lr = config.learning_rate;

  TrainReport report;
  report.config_echo = config.to_manifest();
  double best = INFINITY;
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (auto* p : params) p->zero_grad();
    tensor::Tape tape;
    tensor::Var h = rgcn::model_forward(tape, messages, tape.constant(h0), model, true,
                                        derive_seed(config.seed, "epoch", epoch));
    tensor::Var loss = pair_loss(h, pairs, config.reduction);
    const double value = loss.value().item();
    if (!std::isfinite(value)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
    }
    report.losses.push_back(value);
    tape.backward(loss);
    if (!params.empty()) tensor::adam_step(params, adam);

    if (config.patience > 0) {
      if (value < best) {
        best = value;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    }
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double evaluate_loss(const graph::HeteroGraph& g, const graph::QrWeightTable& targets,
                     const rgcn::RgcnModel& model, tensor::Reduction reduction) {
  const auto pairs = resolve_targets(g, targets);
  tensor::Tape tape;
  tensor::Var h = tape.constant(rgcn::infer(g, model));
  return pair_loss(h, pairs, reduction).value().item();
}

// ---- baselines ------------------------------------------------------------

metrics::RankedList fedbert_baseline(std::span<const double> query_vector,
                                     const embedding::EmbeddingStore& resource_store) {
  std::vector<metrics::ScoredItem> items;
  items.reserve(resource_store.size());
  for (const auto& id : resource_store.ids()) {
    const auto r = resource_store.get(id);
    items.push_back({id, embedding::cosine(query_vector, std::span<const double>(r))});
  }
  return metrics::RankedList(std::move(items));
}

metrics::RankedList random_baseline(const embedding::EmbeddingStore& resource_store,
                                    std::uint64_t seed) {
  Rng rng(seed);
  std::vector<metrics::ScoredItem> items;
  for (const auto& id : resource_store.ids()) items.push_back({id, rng.uniform()});
  return metrics::RankedList(std::move(items));
}

const char* to_string(Method m) {
  switch (m) {
    case Method::fedgnn: return "fedgnn";
    case Method::fedbert: return "fedbert";
    case Method::random: return "random";
  }
  return "?";
}

// ---- cross-validation -----------------------------------------------------

PreparedFold prepare_training(const corpus::Dataset& dataset,
                              const embedding::EmbeddingStore& query_store,
                              const embedding::EmbeddingStore& doc_store,
                              const std::vector<std::string>& train_queries,
                              const TrainConfig& config) {
  const std::set<std::string> train_set(train_queries.begin(), train_queries.end());
  const auto train_judgments = dataset.judgments.restrict_to(train_set);
  const auto top = corpus::select_top_documents(dataset.judgments, dataset.doc_map,
                                                config.top_n, &train_set);
  auto resources = embedding::build_resource_store(top, doc_store);

  graph::GraphConfig gc = config.graph_config();
  if (gc.alpha_mode == graph::AlphaMode::auto_max) {
    gc.alpha = graph::compute_alpha(train_judgments);
  }
  auto targets = graph::qr_weights(train_judgments, gc.alpha);
  if (config.inference_qr == InferenceQr::mean && !targets.empty()) {
    double total = 0.0;
    for (const auto& [key, z] : targets) total += z;
    gc.inference_qr_weight = total / static_cast<double>(targets.size());
  }
  auto g = graph::build_training_graph(train_queries, query_store, resources.store,
                                       targets, gc);
  return PreparedFold{train_queries, std::move(resources), std::move(targets), gc,
                      std::move(g)};
}

double CvReport::mean(Method m, const metrics::MetricSpec& spec) const {
  auto it = averaged.find(m);
  if (it != averaged.end()) {
    for (const auto& [s, v] : it->second) {
      if (s == spec) return v;
    }
  }
  throw UsageError(std::string("no averaged ") + spec.label() + " for " + to_string(m));
}

std::string CvReport::to_tsv() const {
  std::string out = "method\tmetric\tfold\tvalue\n";
  for (const auto& [method, specs] : averaged) {
    for (const auto& f : folds) {
      for (const auto& r : f.metrics.at(method)) {
        out += std::string(to_string(method)) + "\t" + r.metric + "@" +
               std::to_string(r.k) + "\t" + std::to_string(f.fold) + "\t" +
               text::real(r.mean) + "\n";
      }
    }
    for (const auto& [spec, v] : specs) {
      out += std::string(to_string(method)) + "\t" + spec.label() + "\tmean\t" +
             text::real(v) + "\n";
    }
  }
  return out;
}

CvReport cross_validate(const corpus::Dataset& dataset,
                        const embedding::EmbeddingStore& query_store,
                        const embedding::EmbeddingStore& doc_store,
                        const TrainConfig& config, const CvOptions& options) {
  config.validate();
  if (!dataset.judgments.resolved()) throw UsageError("dataset is not validated");
  const auto& judged = dataset.judgments.query_ids();
  for (const auto& q : judged) {
    if (!query_store.contains(q)) throw ValidationError("no embedding for query " + q);
  }
  const FoldSplit split = kfold_split(judged, config.folds, config.seed);

  std::vector<Method> methods{Method::fedgnn};
  if (options.baselines) {
    methods.push_back(Method::fedbert);
    methods.push_back(Method::random);
  }

  CvReport cv;
  for (std::size_t f = 0; f < split.folds.size(); ++f) {
    FoldResult fold;
    fold.fold = f;
    fold.test_queries = split.folds[f];
    std::sort(fold.test_queries.begin(), fold.test_queries.end());
    fold.train_queries = split.training_queries(f);
    if (fold.test_queries.empty()) {
      throw ValidationError("fold " + std::to_string(f) + " has no judged test queries");
    }

    auto prepared =
        prepare_training(dataset, query_store, doc_store, fold.train_queries, config);
    for (const auto& q : fold.test_queries) {
      if (prepared.graph.find(graph::NodeType::query, q)) {
        throw ValidationError("test query " + q + " leaked into the training graph of fold " +
                              std::to_string(f));
      }
    }
    fold.graph_stats = graph::graph_stats(prepared.graph);

    TrainConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, "fold", f);
    rgcn::RgcnModel model =
        rgcn::init_params(config.model_config(query_store.dim()), fold_config.seed);
    fold.report = train(prepared.graph, prepared.targets, model, fold_config);

    for (Method m : methods) {
      auto& reports = fold.metrics[m];
      for (const auto& spec : config.metrics) reports.push_back({spec.name, spec.k, {}, 0.0});
    }
    for (std::size_t qi = 0; qi < fold.test_queries.size(); ++qi) {
      const auto& q = fold.test_queries[qi];
      const auto qv = query_store.get(q);
      const auto rel = metrics::resource_relevance(dataset.judgments, q, dataset.doc_map);
      for (Method m : methods) {
        metrics::RankedList ranking;
        switch (m) {
          case Method::fedgnn:
            ranking = rgcn::rank_resources(model, qv, prepared.resources.store,
                                           prepared.graph_config);
            break;
          case Method::fedbert:
            ranking = fedbert_baseline(qv, prepared.resources.store);
            break;
          case Method::random:
            ranking = random_baseline(prepared.resources.store,
                                      derive_seed(fold_config.seed, "random", qi));
            break;
        }
        auto& reports = fold.metrics[m];
        for (std::size_t s = 0; s < config.metrics.size(); ++s) {
          reports[s].add(q, metrics::evaluate(config.metrics[s], ranking, rel, config.gain));
        }
      }
    }
    for (auto& [m, reports] : fold.metrics) {
      for (auto& r : reports) r.finalize();
    }

    fold.checkpoint.meta.seed = fold_config.seed;
    fold.checkpoint.meta.epoch = static_cast<std::uint32_t>(fold.report.losses.size());
    fold.checkpoint.meta.loss = fold.report.final_loss();
    fold.checkpoint.meta.graph = prepared.graph_config;
    fold.checkpoint.model = std::move(model);
    fold.resource_store = std::move(prepared.resources.store);
    cv.folds.push_back(std::move(fold));
  }

  for (Method m : methods) {
    auto& avg = cv.averaged[m];
    for (std::size_t s = 0; s < config.metrics.size(); ++s) {
      double sum = 0.0;
      for (const auto& f : cv.folds) sum += f.metrics.at(m)[s].mean;
      avg.emplace_back(config.metrics[s], sum / static_cast<double>(cv.folds.size()));
    }
  }
  return cv;
}

}  // namespace fedrank::training
