#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spamgraph/checkpoint.hpp"
#include "spamgraph/embedding.hpp"
#include "spamgraph/error.hpp"
#include "spamgraph/fixture.hpp"
#include "spamgraph/graph.hpp"
#include "spamgraph/metrics.hpp"
#include "spamgraph/records.hpp"
#include "spamgraph/synth.hpp"
#include "spamgraph/trainer.hpp"

namespace sg = spamgraph;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// ----------------------------------------------------------------- helpers

struct Corpus {
  std::vector<std::string> texts;
  std::vector<sg::Label> labels;
  std::vector<sg::ReviewRecord> reviews;
  std::vector<sg::QARecord> qa;
  std::size_t size() const { return texts.size(); }
};

Corpus load_corpus(const std::string& path, const std::string& kind) {
  Corpus c;
  if (kind == "qa") {
    c.qa = sg::ingest_qa(path);
    for (const auto& r : c.qa) c.texts.push_back(r.text);
    c.labels = sg::labels_of(std::span<const sg::QARecord>(c.qa));
  } else {
    c.reviews = sg::ingest_reviews(path, sg::InputFormat::jsonl);
    for (const auto& r : c.reviews) c.texts.push_back(r.text);
    c.labels = sg::labels_of(std::span<const sg::ReviewRecord>(c.reviews));
  }
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sg::Error("cannot write '" + path + "'");
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sg::Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

sg::SplitRatios parse_ratios(const std::vector<double>& r) {
  if (r.size() != 3) throw sg::InvalidArgument("--ratios takes three values");
  return {r[0], r[1], r[2]};
}

std::map<std::string, sg::ProductMetadata> load_metadata(const std::string& path) {
  std::map<std::string, sg::ProductMetadata> out;
  if (path.empty()) return out;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      sg::ProductMetadata m;
      m.name = j.value("name", std::string{});
      m.category = j.value("category", std::string{});
      m.description = j.value("description", std::string{});
      out[j.at("product_id").get<std::string>()] = std::move(m);
    } catch (const json::exception& e) {
      throw sg::FormatError("metadata row " + std::to_string(row) + ": " + e.what());
    }
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Scores file: CSV "node,score", one row per node in id order.
void save_scores(const std::string& path, const std::vector<double>& scores) {
  std::string out = "node,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out += std::to_string(i) + "," + format_double(scores[i]) + "\n";
  }
  write_text(path, out);
}

std::vector<double> load_scores(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("node,score", 0) != 0) {
    throw sg::FormatError("scores file '" + path + "' lacks the node,score header");
  }
  std::vector<double> scores;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      const auto node = std::stoull(line.substr(0, comma));
      if (node != scores.size()) throw std::invalid_argument("nodes out of order");
      scores.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception& e) {
      throw sg::FormatError("scores row " + std::to_string(row) + ": " + e.what());
    }
  }
  return scores;
}

// --------------------------------------------------------------- commands

struct CommonCorpus {
  std::string corpus;
  std::string kind = "reviews";
};

void add_corpus_options(CLI::App* cmd, CommonCorpus& c, bool required = true) {
  auto* opt = cmd->add_option("--corpus", c.corpus, "Normalized corpus JSONL");
  if (required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--kind", c.kind, "Corpus kind")
      ->check(CLI::IsMember({"reviews", "qa"}))
      ->capture_default_str();
}

struct IngestArgs {
  std::string input, output, format = "jsonl", kind = "reviews";
};

void run_ingest(const IngestArgs& a) {
  std::ostringstream os;
  std::size_t n = 0;
  if (a.kind == "qa") {
    const auto recs = sg::ingest_qa(a.input);
    sg::write_qa_jsonl(os, recs);
    n = recs.size();
  } else {
    const auto recs = sg::ingest_reviews(a.input, sg::parse_input_format(a.format));
    sg::write_reviews_jsonl(os, recs);
    n = recs.size();
  }
  write_text(a.output, os.str());
  std::cerr << "ingested " << n << " records\n";
}

struct SplitArgs {
  CommonCorpus corpus;
  std::vector<double> ratios{0.01, 0.09, 0.90};
  std::uint64_t seed = 0;
  bool stratified = false;
  std::string output;
};

void run_split(const SplitArgs& a) {
  const auto c = load_corpus(a.corpus.corpus, a.corpus.kind);
  const auto ratios = parse_ratios(a.ratios);
  const auto split = a.stratified ? sg::make_stratified_split(c.labels, ratios, a.seed)
                                  : sg::make_split(c.size(), ratios, a.seed);
  sg::save_split(a.output, split);
  std::cerr << "split " << split.count(sg::SplitTag::train) << "/"
            << split.count(sg::SplitTag::valid) << "/" << split.count(sg::SplitTag::test) << "\n";
}

struct GraphArgs {
  CommonCorpus corpus;
  std::size_t max_group_size = 0;
  std::string output;
};

sg::ReviewGraph graph_of(const Corpus& c, const std::string& kind, std::size_t max_group) {
  sg::GraphBuildOptions opts;
  opts.max_group_size = max_group;
  return kind == "qa" ? sg::build_qa_graph(c.qa, opts) : sg::build_review_graph(c.reviews, opts);
}

void run_build_graph(const GraphArgs& a) {
  const auto c = load_corpus(a.corpus.corpus, a.corpus.kind);
  const auto g = graph_of(c, a.corpus.kind, a.max_group_size);
  sg::save_graph(a.output, g);
  std::cerr << "graph: " << g.num_nodes() << " nodes, " << g.num_relation_edges() << " edges\n";
}

struct GraphStatsArgs {
  std::string graph;
  CommonCorpus corpus;
  std::string output;
};

void run_graph_stats(const GraphStatsArgs& a) {
  auto g = sg::load_graph(a.graph);
  if (!a.corpus.corpus.empty()) g.set_labels(load_corpus(a.corpus.corpus, a.corpus.kind).labels);
  write_text(a.output, sg::graph_stats_json(sg::graph_stats(g)) + "\n");
}

struct EmbedArgs {
  CommonCorpus corpus;
  std::string method = "hash";
  std::size_t dim = 64;
  std::uint64_t seed = 0;
  std::string endpoint;
  std::size_t batch_size = 32;
  std::size_t concurrency = 1;
  int retries = 3;
  std::string output;
};

void run_embed(const EmbedArgs& a) {
  const auto c = load_corpus(a.corpus.corpus, a.corpus.kind);
  sg::EmbeddingMatrix m;
  if (a.method == "hash") {
    m = sg::hash_embed(c.texts, a.dim, a.seed);
  } else {
    if (a.endpoint.empty()) throw sg::InvalidArgument("--endpoint is required for method endpoint");
    auto cfg = sg::embedding_config_from_env(a.endpoint);
    cfg.batch_size = a.batch_size;
    cfg.max_concurrency = a.concurrency;
    cfg.retry.max_attempts = a.retries;
    m = sg::fetch_embeddings(cfg, c.texts);
  }
  sg::save_embeddings(a.output, m);
  std::cerr << "embeddings: " << m.rows() << " x " << m.cols() << "\n";
}

struct ModelInputs {
  std::string graph, embeddings, split, features;
  CommonCorpus corpus;
};

void add_model_inputs(CLI::App* cmd, ModelInputs& in) {
  cmd->add_option("--graph", in.graph, "Graph file (RGPH)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--embeddings", in.embeddings, "Embedding matrix (EMB1)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--split", in.split, "Split JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--features", in.features, "Engineered feature matrix (EMB1 layout)")
      ->check(CLI::ExistingFile);
  add_corpus_options(cmd, in.corpus);
}

struct LoadedInputs {
  sg::ReviewGraph graph;
  sg::EmbeddingMatrix embeddings;
  std::optional<sg::FeatureMatrix> features;
  sg::SplitAssignment split;
  std::vector<sg::Label> labels;

  sg::TrainData data() const {
    return {&graph, &embeddings, features ? &*features : nullptr, &split, labels};
  }
};

LoadedInputs load_inputs(const ModelInputs& in) {
  LoadedInputs l;
  l.graph = sg::load_graph(in.graph);
  l.embeddings = sg::load_embeddings(in.embeddings);
  if (!in.features.empty()) l.features = sg::load_embeddings(in.features);
  l.split = sg::load_split(in.split);
  l.labels = load_corpus(in.corpus.corpus, in.corpus.kind).labels;
  l.graph.set_labels(l.labels);
  const auto n = l.graph.num_nodes();
  if (l.embeddings.rows() != n || l.split.size() != n || (l.features && l.features->rows() != n)) {
    throw sg::InvalidArgument("graph, embeddings, features and split disagree on node count");
  }
  return l;
}

struct TrainArgs {
  ModelInputs in;
  sg::ModelConfig model;
  sg::TrainConfig train;
  bool no_graph = false;
  std::string output, log;
};

void run_train(TrainArgs a) {
  const auto l = load_inputs(a.in);
  a.model.emb_dim = l.embeddings.cols();
  a.model.feature_dim = l.features ? l.features->cols() : 0;
  a.model.use_graph = !a.no_graph;
  std::string log_text;
  const auto result = sg::train(l.data(), a.model, a.train, [&](const sg::EpochLog& row) {
    const auto line = sg::epoch_log_json(row);
    log_text += line + "\n";
    std::cerr << line << "\n";
  });
  sg::save_checkpoint(a.output, result.best);
  if (!a.log.empty()) write_text(a.log, log_text);
  if (result.diverged) {
    std::cerr << "training diverged; kept the last good checkpoint\n";
  }
  std::cerr << "best epoch " << result.best_epoch;
  if (result.best_valid_auc) std::cerr << " valid auc " << *result.best_valid_auc;
  std::cerr << "\n";
}

struct PredictArgs {
  ModelInputs in;
  std::string checkpoint, output;
};

void run_predict(const PredictArgs& a) {
  const auto l = load_inputs(a.in);
  const auto ckpt = sg::load_checkpoint(a.checkpoint);
  save_scores(a.output, sg::score_nodes(ckpt, l.data()));
}

struct EvaluateArgs {
  std::string scores, split, roc, output;
  CommonCorpus corpus;
  double ratio = 0.03;
  bool include_valid = false;
};

void run_evaluate(const EvaluateArgs& a) {
  const auto scores = load_scores(a.scores);
  const auto labels = load_corpus(a.corpus.corpus, a.corpus.kind).labels;
  const auto split = sg::load_split(a.split);
  if (scores.size() != labels.size() || split.size() != labels.size()) {
    throw sg::InvalidArgument("scores, corpus and split disagree on node count");
  }
  std::vector<double> s;
  std::vector<int> y;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool take = split.tags[i] == sg::SplitTag::test ||
                      (a.include_valid && split.tags[i] == sg::SplitTag::valid);
    if (!take) continue;
    if (labels[i] == sg::Label::unknown) {
      throw sg::InvalidArgument("evaluated node " + std::to_string(i) + " has no label");
    }
    s.push_back(scores[i]);
    y.push_back(labels[i] == sg::Label::spam ? 1 : 0);
  }
  const auto at = sg::precision_recall_at_ratio(s, y, a.ratio);
  write_text(a.output, sg::metrics_json(sg::auc(s, y), at, a.ratio, s.size()) + "\n");
  if (!a.roc.empty()) {
    std::string csv = "false_positive_rate,true_positive_rate,threshold\n";
    for (const auto& p : sg::roc_curve(s, y)) {
      csv += format_double(p.false_positive_rate) + "," + format_double(p.true_positive_rate) +
             "," + format_double(p.threshold) + "\n";
    }
    write_text(a.roc, csv);
  }
}

// ------------------------------------------------------------------ synth

struct SynthPlanArgs {
  std::string corpus, output;
  sg::PlanOptions opts;
  std::string sentiment = "positive";
};

void run_synth_plan(SynthPlanArgs a) {
  const auto recs = sg::ingest_reviews(a.corpus, sg::InputFormat::jsonl);
  a.opts.sentiment = sg::parse_sentiment(a.sentiment);
  const auto plan = sg::make_synthesis_plan(recs, a.opts);
  sg::save_plan(a.output, plan);
  std::cerr << "plan: " << plan.targets.size() << " targets\n";
}

struct SynthGenerateArgs {
  std::string plan, output, endpoint, metadata, report;
  bool stub = false;
  std::uint64_t seed = 0;
  std::size_t concurrency = 1;
  int retries = 3;
};

void run_synth_generate(const SynthGenerateArgs& a) {
  if (a.stub == !a.endpoint.empty()) {
    throw sg::InvalidArgument("synth generate needs exactly one of --stub or --endpoint");
  }
  auto plan = sg::load_plan(a.plan);
  const auto metadata = load_metadata(a.metadata);
  std::unique_ptr<sg::ChatClient> client;
  if (a.stub) {
    client = std::make_unique<sg::StubChatClient>(a.seed);
  } else {
    sg::RetryPolicy retry;
    retry.max_attempts = a.retries;
    client = std::make_unique<sg::HttpChatClient>(sg::HttpChatClient::from_env(a.endpoint, retry));
  }
  const auto outcomes = sg::fill_plan_texts(plan, *client, metadata, a.concurrency);
  sg::save_plan(a.output, plan);
  sg::ParseReport total;
  ordered_json rows = ordered_json::array();
  for (const auto& o : outcomes) {
    total.expected += o.report.expected;
    total.parsed += o.report.parsed;
    rows.push_back({{"product_id", o.product_id},
                    {"expected", o.report.expected},
                    {"parsed", o.report.parsed}});
  }
  std::cerr << "generated " << total.parsed << " of " << total.expected << " reviews\n";
  if (!a.report.empty()) {
    ordered_json rep;
    rep["expected"] = total.expected;
    rep["parsed"] = total.parsed;
    rep["targets"] = std::move(rows);
    write_text(a.report, rep.dump(2) + "\n");
  }
}

struct SynthInjectArgs {
  std::string corpus, plan, output;
  std::uint64_t seed = 0;
};

void run_synth_inject(const SynthInjectArgs& a) {
  const auto recs = sg::ingest_reviews(a.corpus, sg::InputFormat::jsonl);
  const auto out = sg::inject_spam(recs, sg::load_plan(a.plan), a.seed);
  sg::save_reviews_jsonl(a.output, out);
  const auto spam = out.size() - recs.size();
  std::cerr << "injected " << spam << " spam reviews (" << std::setprecision(4)
            << 100.0 * static_cast<double>(spam) / static_cast<double>(out.size()) << "%)\n";
}

struct SynthStatsArgs {
  std::string plan, output;
  bool smoothing = false;
};

void run_synth_stats(const SynthStatsArgs& a) {
  const auto plan = sg::load_plan(a.plan);
  std::vector<std::vector<std::string>> groups;
  sg::ParseReport totals;
  for (const auto& t : plan.targets) {
    groups.push_back(t.texts);
    totals.parsed += t.texts.size();
    totals.expected += plan.reviews_per_product;
  }
  sg::BleuOptions bleu;
  bleu.smoothing = a.smoothing;
  write_text(a.output, sg::corpus_stats_json(sg::corpus_stats(groups, bleu), totals) + "\n");
}

struct SynthJudgeArgs {
  std::string plan, metadata, output;
};

void run_synth_judge_prompts(const SynthJudgeArgs& a) {
  const auto plan = sg::load_plan(a.plan);
  const auto metadata = load_metadata(a.metadata);
  std::string out;
  for (const auto& t : plan.targets) {
    const auto it = metadata.find(t.product_id);
    const auto* meta = it == metadata.end() ? nullptr : &it->second;
    const auto req = sg::generation_request_for(plan, t, meta);
    for (std::size_t k = 0; k < t.texts.size(); ++k) {
      const auto p = sg::render_judge_prompt(req.product_name, req.product_category, t.texts[k]);
      ordered_json row;
      row["product_id"] = t.product_id;
      row["review_index"] = k;
      row["system"] = p.system;
      row["user"] = p.user;
      out += row.dump() + "\n";
    }
  }
  write_text(a.output, out);
}

struct SynthFixtureArgs {
  std::string kind = "separable", output;
  std::uint64_t seed = 0;
  std::size_t reviews = 0;
};

void run_synth_fixture(const SynthFixtureArgs& a) {
  std::vector<sg::ReviewRecord> recs;
  if (a.kind == "separable") {
    sg::SeparableCorpusOptions o;
    o.seed = a.seed;
    if (a.reviews) o.reviews = a.reviews;
    recs = sg::make_separable_corpus(o);
  } else {
    sg::BaseCorpusOptions o;
    o.seed = a.seed;
    if (a.reviews) o.reviews = a.reviews;
    recs = sg::make_base_corpus(o);
  }
  sg::save_reviews_jsonl(a.output, recs);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Review-graph spam detection and synthetic spam dataset tooling", "spamgraph"};
  app.set_config("--config", "", "INI config file; [section] names match subcommands");
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate and normalize a raw corpus to JSONL");
  c_ingest->add_option("--input", ingest.input, "Raw corpus")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--output", ingest.output, "Normalized JSONL")->required();
  c_ingest->add_option("--format", ingest.format, "Input format")
      ->check(CLI::IsMember({"jsonl", "csv"}))
      ->capture_default_str();
  c_ingest->add_option("--kind", ingest.kind, "Corpus kind (qa reads JSONL only)")
      ->check(CLI::IsMember({"reviews", "qa"}))
      ->capture_default_str();

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Assign nodes to train/valid/test");
  add_corpus_options(c_split, split.corpus);
  c_split->add_option("--ratios", split.ratios, "train valid test fractions")
      ->expected(3)
      ->delimiter(',')
      ->capture_default_str();
  c_split->add_option("--seed", split.seed, "PRNG seed")->capture_default_str();
  c_split->add_flag("--stratified", split.stratified, "Apply the ratios within each label class");
  c_split->add_option("--output", split.output, "Split JSON")->required();

  GraphArgs graph;
  auto* c_graph = app.add_subcommand("build-graph", "Build the review graph");
  add_corpus_options(c_graph, graph.corpus);
  c_graph->add_option("--max-group-size", graph.max_group_size,
                      "Skip relation groups larger than this (0: no cap)")
      ->capture_default_str();
  c_graph->add_option("--output", graph.output, "Graph file (RGPH)")->required();

  GraphStatsArgs gstats;
  auto* c_gstats = app.add_subcommand("graph-stats", "Summarize a graph as JSON");
  c_gstats->add_option("--graph", gstats.graph, "Graph file")->required()->check(CLI::ExistingFile);
  add_corpus_options(c_gstats, gstats.corpus, false);
  c_gstats->add_option("--output", gstats.output, "Output JSON (default stdout)");

  EmbedArgs embed;
  auto* c_embed = app.add_subcommand("embed", "Embed corpus texts");
  add_corpus_options(c_embed, embed.corpus);
  c_embed->add_option("--method", embed.method, "hash or endpoint")
      ->check(CLI::IsMember({"hash", "endpoint"}))
      ->capture_default_str();
  c_embed->add_option("--dim", embed.dim, "Hash embedding width")->capture_default_str();
  c_embed->add_option("--seed", embed.seed, "Hash seed")->capture_default_str();
  c_embed->add_option("--endpoint", embed.endpoint, "Embedding service URL (key: EMBED_API_KEY)");
  c_embed->add_option("--batch-size", embed.batch_size, "Texts per request")->capture_default_str();
  c_embed->add_option("--concurrency", embed.concurrency, "Requests in flight")
      ->capture_default_str();
  c_embed->add_option("--retries", embed.retries, "Attempts per request")->capture_default_str();
  c_embed->add_option("--output", embed.output, "Embedding file (EMB1)")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train the detector");
  add_model_inputs(c_train, train.in);
  c_train->add_flag("--no-graph", train.no_graph, "Skip the transformer layers");
  c_train->add_option("--layer-width", train.model.layer_width, "Width of each layer")
      ->capture_default_str();
  c_train->add_option("--heads", train.model.heads, "Attention heads")->capture_default_str();
  c_train->add_option("--layers", train.model.layers, "Transformer layers")->capture_default_str();
  c_train->add_option("--prelu-slope", train.model.prelu_slope_init, "Initial PReLU slope")
      ->capture_default_str();
  c_train->add_flag("--attention-scaling", train.model.attention_scaling,
                    "Divide attention logits by sqrt(head width)");
  c_train->add_option("--epochs", train.train.epochs, "Maximum epochs")->capture_default_str();
  c_train->add_option("--batch-size", train.train.batch_size, "Train nodes per batch")
      ->capture_default_str();
  c_train->add_option("--lr", train.train.lr, "Adam learning rate")->capture_default_str();
  c_train->add_option("--patience", train.train.early_stop_patience,
                      "Early-stopping patience (0: off)")
      ->capture_default_str();
  c_train->add_option("--clip-norm", train.train.clip_norm, "Global gradient clip (<=0: off)")
      ->capture_default_str();
  c_train->add_option("--seed", train.train.seed, "PRNG seed")->capture_default_str();
  c_train->add_option("--output", train.output, "Checkpoint (FSQ1)")->required();
  c_train->add_option("--log", train.log, "Epoch log JSONL");

  PredictArgs predict;
  auto* c_predict = app.add_subcommand("predict", "Score every node with a checkpoint");
  add_model_inputs(c_predict, predict.in);
  c_predict->add_option("--checkpoint", predict.checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  c_predict->add_option("--output", predict.output, "Scores CSV (node,score)")->required();

  EvaluateArgs evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "Ranking metrics on held-out nodes");
  c_eval->add_option("--scores", evaluate.scores, "Scores CSV")->required()->check(CLI::ExistingFile);
  add_corpus_options(c_eval, evaluate.corpus);
  c_eval->add_option("--split", evaluate.split, "Split JSON")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--ratio", evaluate.ratio, "Fraction of nodes flagged as spam")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_eval->add_flag("--include-valid", evaluate.include_valid, "Evaluate valid and test nodes");
  c_eval->add_option("--roc", evaluate.roc, "Write ROC points CSV");
  c_eval->add_option("--output", evaluate.output, "Metrics JSON (default stdout)");

  auto* c_synth = app.add_subcommand("synth", "Synthetic spam dataset construction");
  c_synth->require_subcommand(1);

  SynthPlanArgs splan;
  auto* c_splan = c_synth->add_subcommand("plan", "Pick targets and compromised users");
  c_splan->add_option("--corpus", splan.corpus, "Genuine corpus JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  c_splan->add_option("--targets", splan.opts.target_count, "Target products")
      ->capture_default_str();
  c_splan->add_option("--per-product", splan.opts.reviews_per_product, "Spam reviews per target")
      ->capture_default_str();
  c_splan->add_option("--threshold", splan.opts.rating_threshold,
                      "Targets have mean rating below this")
      ->capture_default_str();
  c_splan->add_option("--max-words", splan.opts.max_words, "Word limit stated in the prompt")
      ->capture_default_str();
  c_splan->add_option("--sentiment", splan.sentiment, "positive or negative")
      ->check(CLI::IsMember({"positive", "negative"}))
      ->capture_default_str();
  c_splan->add_option("--seed", splan.opts.seed, "PRNG seed")->capture_default_str();
  c_splan->add_option("--output", splan.output, "Plan JSON")->required();

  SynthGenerateArgs sgen;
  auto* c_sgen = c_synth->add_subcommand("generate", "Fill plan texts from a chat model");
  c_sgen->add_option("--plan", sgen.plan, "Plan JSON")->required()->check(CLI::ExistingFile);
  c_sgen->add_flag("--stub", sgen.stub, "Use the offline deterministic generator");
  c_sgen->add_option("--endpoint", sgen.endpoint, "Chat service URL (key: CHAT_API_KEY)");
  c_sgen->add_option("--metadata", sgen.metadata,
                     "Product metadata JSONL {product_id,name,category,description}")
      ->check(CLI::ExistingFile);
  c_sgen->add_option("--concurrency", sgen.concurrency, "Requests in flight")
      ->capture_default_str();
  c_sgen->add_option("--retries", sgen.retries, "Attempts per request")->capture_default_str();
  c_sgen->add_option("--seed", sgen.seed, "Stub seed")->capture_default_str();
  c_sgen->add_option("--report", sgen.report, "Parse report JSON");
  c_sgen->add_option("--output", sgen.output, "Plan JSON with texts")->required();

  SynthInjectArgs sinj;
  auto* c_sinj = c_synth->add_subcommand("inject", "Append planned spam to the corpus");
  c_sinj->add_option("--corpus", sinj.corpus, "Genuine corpus JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  c_sinj->add_option("--plan", sinj.plan, "Plan JSON with texts")->required()->check(CLI::ExistingFile);
  c_sinj->add_option("--seed", sinj.seed, "Timestamp seed")->capture_default_str();
  c_sinj->add_option("--output", sinj.output, "Labeled corpus JSONL")->required();

  SynthStatsArgs sstats;
  auto* c_sstats = c_synth->add_subcommand("stats", "Length and diversity statistics");
  c_sstats->add_option("--plan", sstats.plan, "Plan JSON with texts")
      ->required()
      ->check(CLI::ExistingFile);
  c_sstats->add_flag("--smoothing", sstats.smoothing, "Add-one BLEU smoothing");
  c_sstats->add_option("--output", sstats.output, "Stats JSON (default stdout)");

  SynthJudgeArgs sjudge;
  auto* c_sjudge = c_synth->add_subcommand("judge-prompts", "Render judge prompts per review");
  c_sjudge->add_option("--plan", sjudge.plan, "Plan JSON with texts")
      ->required()
      ->check(CLI::ExistingFile);
  c_sjudge->add_option("--metadata", sjudge.metadata, "Product metadata JSONL")
      ->check(CLI::ExistingFile);
  c_sjudge->add_option("--output", sjudge.output, "Prompts JSONL (default stdout)");

  SynthFixtureArgs sfix;
  auto* c_sfix = c_synth->add_subcommand("fixture", "Write a generated test corpus");
  c_sfix->add_option("--kind", sfix.kind, "separable (labeled) or base (genuine only)")
      ->check(CLI::IsMember({"separable", "base"}))
      ->capture_default_str();
  c_sfix->add_option("--reviews", sfix.reviews, "Review count (0: kind default)");
  c_sfix->add_option("--seed", sfix.seed, "PRNG seed")->capture_default_str();
  c_sfix->add_option("--output", sfix.output, "Corpus JSONL")->required();

  if (argc < 2) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*c_ingest) run_ingest(ingest);
    else if (*c_split) run_split(split);
    else if (*c_graph) run_build_graph(graph);
    else if (*c_gstats) run_graph_stats(gstats);
    else if (*c_embed) run_embed(embed);
    else if (*c_train) run_train(train);
    else if (*c_predict) run_predict(predict);
    else if (*c_eval) run_evaluate(evaluate);
    else if (*c_splan) run_synth_plan(splan);
    else if (*c_sgen) run_synth_generate(sgen);
    else if (*c_sinj) run_synth_inject(sinj);
    else if (*c_sstats) run_synth_stats(sstats);
    else if (*c_sjudge) run_synth_judge_prompts(sjudge);
    else if (*c_sfix) run_synth_fixture(sfix);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
