#include "fedrank/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fedrank/broker.hpp"
#include "fedrank/error.hpp"
#include "fedrank/graph.hpp"
#include "fedrank/rgcn.hpp"
#include "fedrank/run_config.hpp"
#include "fedrank/synthetic.hpp"
#include "fedrank/text_format.hpp"

namespace fedrank::cli {

namespace fs = std::filesystem;

std::vector<double> lambda_grid(double from, double to, double step) {
  if (!(step > 0.0) || to < from) throw UsageError("lambda grid needs step > 0 and from <= to");
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9));
  std::vector<double> out;
  for (std::size_t i = 0; i <= n; ++i) {
    // Rounded to 1e-12 so that 0.1 * 3 prints and compares as 0.3.
    out.push_back(std::round((from + static_cast<double>(i) * step) * 1e12) / 1e12);
  }
  return out;
}

std::vector<SweepRow> sweep_lambda(const corpus::Dataset& dataset,
                                   const embedding::EmbeddingStore& query_store,
                                   const embedding::EmbeddingStore& doc_store,
                                   const training::TrainConfig& config,
                                   const std::vector<double>& lambdas) {
  const metrics::MetricSpec ndcg{"ndcg", 10};
  const metrics::MetricSpec np{"np", 10};
  std::vector<SweepRow> rows;
  for (double lambda : lambdas) {
    training::TrainConfig c = config;
    c.lambda = lambda;
    c.metrics = {ndcg, np};
    const auto full = training::prepare_training(dataset, query_store, doc_store,
                                                 dataset.judgments.query_ids(), c);
    training::CvOptions options;
    options.baselines = false;
    const auto cv = training::cross_validate(dataset, query_store, doc_store, c, options);
    rows.push_back({lambda, graph::graph_stats(full.graph).rr_edges,
                    cv.mean(training::Method::fedgnn, ndcg),
                    cv.mean(training::Method::fedgnn, np)});
  }
  return rows;
}

std::string sweep_tsv(const std::vector<SweepRow>& rows) {
  std::string out = "lambda\trr_edges\tndcg@10\tnp@10\n";
  for (const auto& r : rows) {
    out += text::real(r.lambda, "%.2f") + "\t" + std::to_string(r.rr_edges) + "\t" +
           text::real(r.ndcg10) + "\t" + text::real(r.np10) + "\n";
  }
  return out;
}

namespace {

// Flags that map onto configuration keys. Values given on the command line
// override the config file, which overrides FEDRANK_SEED and the defaults.
class Settings {
 public:
  void bind(CLI::App* sub, const std::string& flag, const std::string& key,
            const std::string& help) {
    bound_.push_back({sub->add_option(flag, values_[key], help), key});
  }

  void bind_training(CLI::App* sub) {
    bind(sub, "--lr", "learning_rate", "Adam learning rate");
    bind(sub, "--epochs", "epochs", "training epochs per fold");
    bind(sub, "--seed", "seed", "run seed (fallback: FEDRANK_SEED)");
    bind(sub, "--dropout", "dropout", "dropout between layers");
    bind(sub, "--folds", "folds", "cross-validation folds");
    bind(sub, "--layers", "layers", "R-GCN layers");
    bind(sub, "--hidden-dim", "hidden_dim", "hidden width, 0 = input dim");
    bind(sub, "--output-dim", "output_dim", "output width, 0 = input dim");
    bind(sub, "--activation", "activation", "relu | tanh | identity");
    bind(sub, "--aggregator", "aggregator", "sum | mean | max");
    bind(sub, "--loss", "loss_reduction", "sum | mean");
    bind(sub, "--patience", "patience", "early-stopping patience, 0 = off");
    bind(sub, "--inference-qr", "inference_qr", "unseen-query qr weight: unit or mean");
    bind(sub, "--gain", "gain", "nDCG gain: exponential | linear");
    bind(sub, "--metrics", "metrics", "comma-separated, e.g. ndcg@10,np@5");
  }

  void bind_graph(CLI::App* sub) {
    bind(sub, "--lambda", "lambda", "rr-edge similarity threshold");
    bind(sub, "--top-n", "top_n", "documents representing each resource");
    bind(sub, "--alpha", "alpha", "auto or a fixed normalization value");
  }

  void bind_inputs(CLI::App* sub) {
    bind(sub, "--dataset", "dataset", "dataset directory");
    bind(sub, "--embeddings", "embeddings", "directory with queries.emb and docs.emb");
    sub->add_option("--config", config_path_, "key = value configuration file");
  }

  RunConfig resolve() const {
    RunConfig rc;
    seed_from_environment(rc);
    if (!config_path_.empty()) {
      std::ifstream in(config_path_, std::ios::binary);
      if (!in) throw ValidationError("cannot open " + config_path_);
      apply_config_text(rc, in);
    }
    for (const auto& [opt, key] : bound_) {
      if (opt->count() > 0) apply_setting(rc, key, values_.at(key));
    }
    return rc;
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<CLI::Option*, std::string>> bound_;
  std::string config_path_;
};

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << content;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Inputs {
  corpus::Dataset dataset;
  embedding::EmbeddingStore queries{1, embedding::StoreKind::query};
  embedding::EmbeddingStore docs{1, embedding::StoreKind::document};
};

Inputs load_inputs(const RunConfig& rc) {
  if (rc.dataset.empty()) throw UsageError("--dataset is required");
  Inputs in;
  in.dataset = corpus::load_dataset(rc.dataset);
  const fs::path dir = rc.embeddings.empty() ? fs::path(rc.dataset) : fs::path(rc.embeddings);
  in.queries = embedding::read_store(dir / kQueryStoreFile, embedding::StoreKind::query);
  in.docs = embedding::read_store(dir / kDocStoreFile, embedding::StoreKind::document);
  if (in.queries.dim() != in.docs.dim()) {
    throw ValidationError("query store dim " + std::to_string(in.queries.dim()) +
                          " differs from document store dim " +
                          std::to_string(in.docs.dim()));
  }
  return in;
}

// Every query and every mapped document needs a vector.
void check_coverage(const corpus::Dataset& ds, const embedding::EmbeddingStore& queries,
                    const embedding::EmbeddingStore& docs) {
  for (const auto& q : ds.queries) {
    if (!queries.contains(q.query_id)) {
      throw ValidationError("query store has no vector for query " + q.query_id);
    }
  }
  for (const auto& [doc, resource] : ds.doc_map.entries()) {
    if (!docs.contains(doc)) {
      throw ValidationError("document store has no vector for document " + doc);
    }
  }
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> out;
  std::string line;
  while (text::next_line(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::string fold_file(std::size_t fold, const char* suffix) {
  return "fold_" + std::to_string(fold) + suffix;
}

std::string join_lines(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += s + "\n";
  return out;
}

// ---- subcommands ----------------------------------------------------------

struct GenerateArgs {
  std::string kind = "topic";
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  auto corpus = synthetic::generate(a.kind, a.seed);
  auto manifest = corpus::dataset_stats(corpus.dataset);
  manifest.provenance["generator"] = a.kind;
  manifest.provenance["seed"] = std::to_string(a.seed);
  corpus::save_dataset(corpus.dataset, a.out, manifest);
  embedding::write_store(corpus.queries, fs::path(a.out) / kQueryStoreFile);
  embedding::write_store(corpus.documents, fs::path(a.out) / kDocStoreFile);
  out << manifest.to_text();
  return kSuccess;
}

struct IngestArgs {
  std::string queries, qrels, doc_map, docs, out;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out) {
  auto ds = corpus::load_sources(a.queries, a.qrels, a.doc_map, a.docs);
  auto manifest = corpus::dataset_stats(ds);
  manifest.provenance["queries"] = a.queries;
  manifest.provenance["qrels"] = a.qrels;
  manifest.provenance["doc_map"] = a.doc_map;
  if (!a.docs.empty()) manifest.provenance["docs"] = a.docs;
  corpus::save_dataset(ds, a.out, manifest);
  out << manifest.to_text();
  return kSuccess;
}

struct EmbedArgs {
  std::string mode = "synth";
  std::size_t dim = embedding::kDefaultDim;
  std::uint64_t seed = 0;
  std::string query_store, doc_store;
  std::string out;
};

int cmd_embed(const EmbedArgs& a, const RunConfig& rc, std::ostream& out) {
  if (rc.dataset.empty()) throw UsageError("--dataset is required");
  const auto ds = corpus::load_dataset(rc.dataset);
  const fs::path dir = !a.out.empty() ? fs::path(a.out)
                       : rc.embeddings.empty() ? fs::path(rc.dataset)
                                               : fs::path(rc.embeddings);
  embedding::EmbeddingStore queries{1, embedding::StoreKind::query};
  embedding::EmbeddingStore docs{1, embedding::StoreKind::document};
  if (a.mode == "synth") {
    if (a.dim == 0) throw UsageError("--dim must be positive");
    queries = embedding::EmbeddingStore(a.dim, embedding::StoreKind::query);
    docs = embedding::EmbeddingStore(a.dim, embedding::StoreKind::document);
    for (const auto& q : ds.queries) {
      const auto v = embedding::synth_embed(q.text, a.dim, a.seed);
      queries.add(q.query_id, std::span<const double>(v));
    }
    for (const auto& [doc, resource] : ds.doc_map.entries()) {
      // Without document text the id is the only thing to embed.
      const auto* rec = ds.find_document(doc);
      const auto v = embedding::synth_embed(rec ? rec->text() : doc, a.dim, a.seed);
      docs.add(doc, std::span<const double>(v));
    }
  } else if (a.mode == "import") {
    if (a.query_store.empty() || a.doc_store.empty()) {
      throw UsageError("import mode needs --query-store and --doc-store");
    }
    queries = embedding::read_store(a.query_store, embedding::StoreKind::query);
    docs = embedding::read_store(a.doc_store, embedding::StoreKind::document);
    if (queries.dim() != docs.dim()) {
      throw ValidationError("query and document stores have different dims");
    }
    check_coverage(ds, queries, docs);
  } else {
    throw UsageError("--mode must be synth or import");
  }
  fs::create_directories(dir);
  embedding::write_store(queries, dir / kQueryStoreFile);
  embedding::write_store(docs, dir / kDocStoreFile);
  out << "queries\t" << queries.size() << "\ndocuments\t" << docs.size() << "\ndim\t"
      << queries.dim() << "\n";
  return kSuccess;
}

int cmd_build_graph(const RunConfig& rc, const std::string& out_path, std::ostream& out) {
  rc.train.graph_config().validate();
  const auto in = load_inputs(rc);
  const auto prepared = training::prepare_training(
      in.dataset, in.queries, in.docs, in.dataset.judgments.query_ids(), rc.train);
  if (!out_path.empty()) graph::write_graph(prepared.graph, out_path);
  out << graph::graph_stats(prepared.graph).to_table();
  return kSuccess;
}

int cmd_train(const RunConfig& rc, const std::string& out_dir, bool baselines,
              std::ostream& out, std::ostream& err) {
  if (out_dir.empty()) throw UsageError("--out is required");
  const auto in = load_inputs(rc);
  check_coverage(in.dataset, in.queries, in.docs);
  training::CvOptions options;
  options.baselines = baselines;
  const auto cv = training::cross_validate(in.dataset, in.queries, in.docs, rc.train, options);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  for (const auto& f : cv.folds) {
    rgcn::save_checkpoint(f.checkpoint, dir / fold_file(f.fold, ".ckpt"));
    embedding::write_store(f.resource_store, dir / fold_file(f.fold, ".resources.emb"));
    write_text(dir / fold_file(f.fold, ".loss.tsv"), f.report.loss_tsv());
    write_text(dir / fold_file(f.fold, ".test.txt"), join_lines(f.test_queries));
    write_text(dir / fold_file(f.fold, ".graph.tsv"), f.graph_stats.to_table());
    write_text(dir / fold_file(f.fold, ".metrics.tsv"),
               metrics::to_tsv(f.metrics.at(training::Method::fedgnn)));
    err << "fold " << f.fold << ": " << f.report.losses.size() << " epochs, final loss "
        << text::real(f.report.final_loss()) << ", "
        << text::real(f.report.wall_clock_seconds, "%.2f") << " s\n";
  }
  const std::string report = cv.to_tsv();
  write_text(dir / "metrics.tsv", report);
  write_text(dir / "run_manifest.txt",
             rc.to_manifest() + "dataset_digest = " +
                 corpus::dataset_stats(in.dataset).digest + "\n");
  out << report;
  return kSuccess;
}

struct FoldModel {
  rgcn::Checkpoint checkpoint;
  embedding::EmbeddingStore resources{1, embedding::StoreKind::resource};
  std::vector<std::string> test_queries;
};

std::vector<FoldModel> load_run(const fs::path& dir) {
  std::vector<FoldModel> folds;
  for (std::size_t f = 0; fs::exists(dir / fold_file(f, ".ckpt")); ++f) {
    FoldModel m;
    m.checkpoint = rgcn::load_checkpoint(dir / fold_file(f, ".ckpt"));
    m.resources = embedding::read_store(dir / fold_file(f, ".resources.emb"),
                                        embedding::StoreKind::resource);
    m.test_queries = read_lines(dir / fold_file(f, ".test.txt"));
    folds.push_back(std::move(m));
  }
  if (folds.empty()) throw ValidationError("no fold checkpoints in " + dir.string());
  return folds;
}

int cmd_evaluate(const RunConfig& rc, const std::string& run_dir, std::ostream& out) {
  const auto in = load_inputs(rc);
  const auto folds = load_run(run_dir);
  std::vector<metrics::MetricReport> reports;
  for (const auto& spec : rc.train.metrics) reports.push_back({spec.name, spec.k, {}, 0.0});
  for (const auto& f : folds) {
    for (const auto& q : f.test_queries) {
      const auto ranking = rgcn::rank_resources(f.checkpoint.model, in.queries.get(q),
                                                f.resources, f.checkpoint.meta.graph);
      const auto rel = metrics::resource_relevance(in.dataset.judgments, q, in.dataset.doc_map);
      for (std::size_t s = 0; s < reports.size(); ++s) {
        reports[s].add(q, metrics::evaluate(rc.train.metrics[s], ranking, rel, rc.train.gain));
      }
    }
  }
  for (auto& r : reports) r.finalize();
  out << metrics::to_tsv(reports);
  return kSuccess;
}

struct RankArgs {
  std::string checkpoint, resource_store, query_embedding, query_id, query_text;
  std::uint64_t embed_seed = 0;
  std::size_t top = 10;
};

int cmd_rank(const RankArgs& a, std::ostream& out) {
  const auto ckpt = rgcn::load_checkpoint(a.checkpoint);
  const auto store = embedding::read_store(a.resource_store, embedding::StoreKind::resource);
  embedding::EmbeddingVector qv;
  if (!a.query_embedding.empty() == !a.query_text.empty()) {
    throw UsageError("give exactly one of --query-embedding and --query-text");
  }
  if (!a.query_embedding.empty()) {
    const auto qs = embedding::read_store(a.query_embedding, embedding::StoreKind::query);
    if (qs.empty()) throw ValidationError("query store is empty");
    qv = qs.get(a.query_id.empty() ? qs.ids().front() : a.query_id);
  } else {
    qv = embedding::synth_embed(a.query_text, ckpt.model.config.input_dim, a.embed_seed);
  }
  const auto ranking = rgcn::rank_resources(ckpt.model, qv, store, ckpt.meta.graph);
  out << "rank\tresource_id\tscore\n";
  const auto top = ranking.prefix(a.top);
  for (std::size_t i = 0; i < top.size(); ++i) {
    out << (i + 1) << "\t" << top[i].id << "\t" << text::real(top[i].score) << "\n";
  }
  return kSuccess;
}

struct SweepArgs {
  double from = 0.0, to = 1.0, step = 0.1;
  std::string out;
};

int cmd_sweep(const SweepArgs& a, const RunConfig& rc, std::ostream& out) {
  const auto in = load_inputs(rc);
  check_coverage(in.dataset, in.queries, in.docs);
  const auto rows =
      sweep_lambda(in.dataset, in.queries, in.docs, rc.train, lambda_grid(a.from, a.to, a.step));
  const std::string table = sweep_tsv(rows);
  if (!a.out.empty()) write_text(a.out, table);
  out << table;
  return kSuccess;
}

struct BrokerArgs {
  std::string run;
  std::vector<std::size_t> top_t{4, 8};
  std::size_t per_resource = broker::kDefaultLimit;
  std::string backend = "oracle";
  std::string ranker = "fedgnn";
  std::size_t k = 10;
  std::string out;
};

int cmd_broker(const BrokerArgs& a, const RunConfig& rc, std::ostream& out) {
  const auto in = load_inputs(rc);
  const auto folds = load_run(a.run);
  const auto mode = broker::parse_backend(a.backend);
  if (a.ranker != "fedgnn" && a.ranker != "fedbert") {
    throw UsageError("--ranker must be fedgnn or fedbert");
  }
  if (a.top_t.empty()) throw UsageError("--top-t needs at least one value");
  const auto backend =
      mode == broker::BackendMode::oracle
          ? broker::RetrievalBackend::oracle(in.dataset.doc_map, in.dataset.judgments)
          : broker::RetrievalBackend::cosine(in.dataset.doc_map, in.docs);

  std::map<std::size_t, std::vector<broker::BrokerRun>> runs;
  for (const auto& f : folds) {
    for (const auto& q : f.test_queries) {
      broker::BrokerQuery query{q, in.queries.get(q)};
      const auto ranking =
          a.ranker == "fedgnn"
              ? rgcn::rank_resources(f.checkpoint.model, query.vector, f.resources,
                                     f.checkpoint.meta.graph)
              : training::fedbert_baseline(query.vector, f.resources);
      for (std::size_t t : a.top_t) {
        runs[t].push_back(broker::run_query(backend, query, ranking, t, a.per_resource));
      }
    }
  }

  std::map<std::size_t, metrics::MetricReport> reports;
  for (const auto& [t, list] : runs) {
    reports[t] = broker::evaluate_document_level(list, in.dataset.judgments, a.k);
  }
  std::string table = "query_id";
  for (const auto& [t, r] : reports) table += "\tT=" + std::to_string(t);
  table += "\n";
  const auto& first = reports.begin()->second;
  for (std::size_t i = 0; i < first.per_query.size(); ++i) {
    table += first.per_query[i].first;
    for (const auto& [t, r] : reports) table += "\t" + text::real(r.per_query[i].second);
    table += "\n";
  }
  table += "all";
  for (const auto& [t, r] : reports) table += "\t" + text::real(r.mean);
  table += "\n";

  if (!a.out.empty()) {
    const fs::path dir(a.out);
    for (const auto& [t, list] : runs) {
      write_text(dir / ("broker_T" + std::to_string(t) + ".tsv"), broker::run_log_tsv(list));
    }
    write_text(dir / ("broker_p" + std::to_string(a.k) + ".tsv"), table);
  }
  out << table;
  return kSuccess;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fedrank: resource selection with a relational graph network"};
  app.require_subcommand(1);
  Settings settings;

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset with embeddings");
  generate->add_option("--kind", gen.kind, "overfit | topic | fedweb14 | clueweb");
  generate->add_option("--seed", gen.seed, "generator seed");
  generate->add_option("--out", gen.out, "output dataset directory")->required();

  IngestArgs ing;
  auto* ingest = app.add_subcommand("ingest", "validate raw files into a dataset directory");
  ingest->add_option("--queries", ing.queries, "queries TSV")->required();
  ingest->add_option("--qrels", ing.qrels, "TREC qrels")->required();
  ingest->add_option("--doc-map", ing.doc_map, "doc_id to resource_id TSV")->required();
  ingest->add_option("--docs", ing.docs, "optional doc_id/title/body TSV");
  ingest->add_option("--out", ing.out, "output dataset directory")->required();

  EmbedArgs emb;
  auto* embed = app.add_subcommand("embed", "write query and document embedding stores");
  settings.bind_inputs(embed);
  embed->add_option("--mode", emb.mode, "synth | import");
  embed->add_option("--dim", emb.dim, "synth dimensionality");
  embed->add_option("--embed-seed", emb.seed, "synth hashing seed");
  embed->add_option("--query-store", emb.query_store, "import: query store file");
  embed->add_option("--doc-store", emb.doc_store, "import: document store file");
  embed->add_option("--out", emb.out, "output directory (default: --embeddings or --dataset)");

  std::string graph_out;
  auto* build = app.add_subcommand("build-graph", "build the training graph over all queries");
  settings.bind_inputs(build);
  settings.bind_graph(build);
  build->add_option("--out", graph_out, "graph file");

  std::string train_out;
  bool no_baselines = false;
  auto* train = app.add_subcommand("train", "k-fold cross-validated training");
  settings.bind_inputs(train);
  settings.bind_graph(train);
  settings.bind_training(train);
  train->add_option("--out", train_out, "run directory")->required();
  train->add_flag("--no-baselines", no_baselines, "skip the fedbert and random baselines");

  std::string eval_run;
  auto* evaluate = app.add_subcommand("evaluate", "score a run's checkpoints on its test folds");
  settings.bind_inputs(evaluate);
  evaluate->add_option("--run", eval_run, "run directory written by train")->required();
  settings.bind(evaluate, "--metrics", "metrics", "comma-separated metrics");
  settings.bind(evaluate, "--gain", "gain", "exponential | linear");

  RankArgs rk;
  auto* rank = app.add_subcommand("rank", "rank resources for one query");
  rank->add_option("--checkpoint", rk.checkpoint, "checkpoint file")->required();
  rank->add_option("--resource-store", rk.resource_store, "resource store file")->required();
  rank->add_option("--query-embedding", rk.query_embedding, "query store file");
  rank->add_option("--query-id", rk.query_id, "id inside --query-embedding");
  rank->add_option("--query-text", rk.query_text, "text embedded with the synth embedder");
  rank->add_option("--embed-seed", rk.embed_seed, "synth hashing seed for --query-text");
  rank->add_option("--top", rk.top, "number of resources to print");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep-lambda", "cross-validate over a grid of lambda");
  settings.bind_inputs(sweep);
  settings.bind(sweep, "--top-n", "top_n", "documents representing each resource");
  settings.bind(sweep, "--alpha", "alpha", "auto or a fixed normalization value");
  settings.bind_training(sweep);
  sweep->add_option("--from", sw.from, "first lambda");
  sweep->add_option("--to", sw.to, "last lambda");
  sweep->add_option("--step", sw.step, "lambda step");
  sweep->add_option("--out", sw.out, "TSV output file");

  BrokerArgs br;
  auto* brokersim = app.add_subcommand("broker-sim", "document-level retrieval simulation");
  settings.bind_inputs(brokersim);
  brokersim->add_option("--run", br.run, "run directory written by train")->required();
  brokersim->add_option("--top-t", br.top_t, "numbers of selected resources")->delimiter(',');
  brokersim->add_option("--per-resource", br.per_resource, "documents returned per resource");
  brokersim->add_option("--backend", br.backend, "oracle | cosine");
  brokersim->add_option("--ranker", br.ranker, "fedgnn | fedbert");
  brokersim->add_option("--k", br.k, "precision cutoff");
  brokersim->add_option("--out", br.out, "directory for run logs");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kSuccess : kUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen, out);
    if (ingest->parsed()) return cmd_ingest(ing, out);
    const RunConfig rc = settings.resolve();
    if (embed->parsed()) return cmd_embed(emb, rc, out);
    if (build->parsed()) return cmd_build_graph(rc, graph_out, out);
    if (train->parsed()) return cmd_train(rc, train_out, !no_baselines, out, err);
    if (evaluate->parsed()) return cmd_evaluate(rc, eval_run, out);
    if (rank->parsed()) return cmd_rank(rk, out);
    if (sweep->parsed()) return cmd_sweep(sw, rc, out);
    if (brokersim->parsed()) return cmd_broker(br, rc, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace fedrank::cli
