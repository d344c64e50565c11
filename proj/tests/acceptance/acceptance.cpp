// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spamgraph/checkpoint.hpp"
#include "spamgraph/embedding.hpp"
#include "spamgraph/fixture.hpp"
#include "spamgraph/graph.hpp"
#include "spamgraph/metrics.hpp"
#include "spamgraph/model.hpp"
#include "spamgraph/rng.hpp"
#include "spamgraph/synth.hpp"
#include "spamgraph/trainer.hpp"

using namespace spamgraph;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::vector<ReviewRecord> random_corpus(Rng& rng, std::size_t n, std::size_t users,
                                        std::size_t products) {
  std::vector<ReviewRecord> recs(n);
  const std::int64_t base = 1577836800;  // 2020-01-01
  for (std::size_t i = 0; i < n; ++i) {
    recs[i].review_id = i;
    recs[i].user_id = "u" + std::to_string(rng.below(users));
    recs[i].product_id = "p" + std::to_string(rng.below(products));
    recs[i].rating = static_cast<int>(rng.between(1, 5));
    recs[i].timestamp = base + rng.between(0, 200LL * 86400);
    recs[i].label = rng.below(4) == 0 ? Label::spam : Label::normal;
  }
  return recs;
}

template <class T>
Matrix<T> random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale) {
  Matrix<T> m(r, c);
  for (auto& v : m.flat()) v = static_cast<T>(rng.uniform(-scale, scale));
  return m;
}

// ----------------------------------------------------------------------- 1

Outcome gradient_check() {
  const auto t0 = Clock::now();
  Rng rng(11);
  auto recs = random_corpus(rng, 6, 3, 2);
  const auto graph = build_review_graph(recs);
  ModelConfig cfg;
  cfg.emb_dim = 4;
  cfg.feature_dim = 2;
  cfg.layer_width = 4;
  cfg.heads = 2;
  cfg.layers = 2;
  auto params = cast_params<double>(init_params(cfg, 5));
  // Spread the risk rows and MLP output so every tensor sees a gradient of
  // ordinary magnitude.
  for (auto& v : params.risk_table.flat()) v = rng.uniform(-0.5, 0.5);
  params.mlp_b2(0, 0) = 0.1;
  const auto x = random_matrix<double>(rng, 6, 4, 1.0);
  const auto f = random_matrix<double>(rng, 6, 2, 1.0);
  const std::vector<Label> risk{Label::normal, Label::spam, Label::unknown,
                                Label::unknown, Label::normal, Label::spam};
  const std::vector<Label> targets{Label::normal, Label::spam, Label::spam,
                                   Label::normal, Label::normal, Label::spam};
  const std::vector<std::size_t> subset{0, 1, 2, 3, 4, 5};
  const ForwardInputs<double> in{&x, &f, risk, &graph};

  const auto analytic = compute_gradients<double>(params, cfg, in, targets, subset);
  const double h = 1e-3;
  double worst = 0.0;
  std::string worst_name;
  std::size_t tensors = 0;
  auto numeric = zeros_like(params);
  visit_param_pairs(params, numeric, [&](const std::string&, Matrix<double>& p, Matrix<double>& g) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double keep = p.data()[k];
      p.data()[k] = keep + h;
      const double up = oracle::bce(forward<double>(in, params, cfg), targets, subset);
      p.data()[k] = keep - h;
      const double down = oracle::bce(forward<double>(in, params, cfg), targets, subset);
      p.data()[k] = keep;
      g.data()[k] = (up - down) / (2 * h);
    }
  });
  auto analytic_grads = analytic.grads;
  visit_param_pairs(analytic_grads, numeric,
                    [&](const std::string& name, const Matrix<double>& a, const Matrix<double>& n) {
                      ++tensors;
                      double diff = 0.0;
                      double scale = 0.0;
                      for (std::size_t k = 0; k < a.size(); ++k) {
                        diff = std::max(diff, std::abs(a.data()[k] - n.data()[k]));
                        scale = std::max({scale, std::abs(a.data()[k]), std::abs(n.data()[k])});
                      }
                      const double rel = scale > 0 ? diff / scale : 0.0;
                      if (rel > worst) {
                        worst = rel;
                        worst_name = name;
                      }
                    });
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 10.0,
          std::to_string(tensors) + " tensors, max rel err " + fmt(worst) + " (" + worst_name +
              "), " + fmt(secs) + " s"};
}

// ----------------------------------------------------------------------- 2

Outcome dense_oracle() {
  Rng rng(22);
  double worst = 0.0;
  const int instances = 40;
  for (int t = 0; t < instances; ++t) {
    const auto n = static_cast<std::size_t>(rng.between(1, 50));
    auto recs = random_corpus(rng, n, 1 + n / 4, 1 + n / 6);
    const auto graph = build_review_graph(recs);
    ModelConfig cfg;
    cfg.emb_dim = 6;
    cfg.heads = static_cast<std::size_t>(rng.between(1, 3));
    cfg.layer_width = cfg.heads * static_cast<std::size_t>(rng.between(1, 4));
    cfg.layers = static_cast<std::size_t>(rng.between(1, 3));
    cfg.attention_scaling = t % 2 == 1;
    cfg.use_graph = t % 7 != 3;
    cfg.feature_dim = t % 3 == 0 ? 2 : 0;
    const auto params = init_params(cfg, static_cast<std::uint64_t>(t));
    const auto x = random_matrix<float>(rng, n, cfg.emb_dim, 1.0);
    const auto f = random_matrix<float>(rng, n, cfg.feature_dim, 1.0);
    std::vector<Label> risk(n);
    for (auto& r : risk) r = static_cast<Label>(rng.below(3));
    const ForwardInputs<float> in{&x, cfg.feature_dim ? &f : nullptr, risk, &graph};
    const auto got = forward<float>(in, params, cfg);
    const auto xd = x.cast<double>();
    const auto fd = f.cast<double>();
    const auto want = oracle::dense_forward(xd, cfg.feature_dim ? &fd : nullptr, risk, &graph,
                                            cast_params<double>(params), cfg);
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(static_cast<double>(got[i]) - want[i]));
    }
  }
  return {worst < 1e-5, std::to_string(instances) + " graphs (n <= 50), max abs diff " + fmt(worst)};
}

// ----------------------------------------------------------------------- 3

Outcome graph_oracle() {
  Rng rng(33);
  std::size_t mismatches = 0;
  double slowest = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto n = static_cast<std::size_t>(rng.between(1, 200));
    auto recs = random_corpus(rng, n, 1 + rng.below(n), 1 + rng.below(1 + n / 3));
    const auto t0 = Clock::now();
    const auto graph = build_review_graph(recs);
    slowest = std::max(slowest, seconds_since(t0));
    bool ok = oracle::graph_edges(graph) == oracle::review_edges(recs);
    ok = ok && graph.num_self_loops() == n;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (auto j : graph.neighbors(i)) ok = ok && graph.contains(j, i);
    }
    if (!ok) ++mismatches;
  }
  return {mismatches == 0 && slowest < 1.0,
          "100 corpora, " + std::to_string(mismatches) + " mismatches, slowest build " +
              fmt(slowest) + " s"};
}

// ----------------------------------------------------------------------- 4

Outcome auc_oracle() {
  Rng rng(44);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(rng.between(2, 100));
    std::vector<double> s(n);
    std::vector<int> y(n);
    const bool coarse = t % 2 == 0;  // coarse scores produce many ties
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? static_cast<double>(rng.below(5)) : rng.normal();
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 1;
    y[1] = 0;
    worst = std::max(worst, std::abs(auc(s, y) - oracle::pair_count_auc(s, y)));
  }
  return {worst <= 1e-12, "1000 instances, max diff " + fmt(worst)};
}

// ----------------------------------------------------------------------- 5

Outcome label_leakage() {
  Rng rng(55);
  std::size_t checks = 0;
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 40;
    auto recs = random_corpus(rng, n, 8, 5);
    const auto graph = build_review_graph(recs);
    auto labels = labels_of(recs);
    const auto split = make_split(n, {0.5, 0.25, 0.25}, static_cast<std::uint64_t>(t));
    const auto train_nodes = split.nodes(SplitTag::train);
    const std::vector<std::size_t> batch(train_nodes.begin(), train_nodes.begin() + 5);
    ModelConfig cfg;
    cfg.emb_dim = 8;
    cfg.layer_width = 6;
    cfg.heads = 2;
    const auto params = init_params(cfg, 3);
    const auto x = random_matrix<float>(rng, n, 8, 1.0);
    const auto risk_a = build_risk_labels(split, labels, batch, RiskMode::train);
    const auto out_a = forward<float>({&x, nullptr, risk_a, &graph}, params, cfg);
    for (auto i : batch) {
      auto flipped = labels;
      flipped[i] = flipped[i] == Label::spam ? Label::normal : Label::spam;
      const auto risk_b = build_risk_labels(split, flipped, batch, RiskMode::train);
      const auto out_b = forward<float>({&x, nullptr, risk_b, &graph}, params, cfg);
      worst = std::max(worst, std::abs(static_cast<double>(out_a[i]) - out_b[i]));
      ++checks;
    }
  }
  return {worst == 0.0, std::to_string(checks) + " flips, max output change " + fmt(worst)};
}

// ----------------------------------------------------------------------- 6

struct PipelineArtifacts {
  std::vector<std::uint8_t> checkpoint;
  std::string metrics;
  std::string log;
  double best_valid_auc = 0.0;
};

PipelineArtifacts run_pipeline(const std::vector<ReviewRecord>& recs, std::uint64_t seed) {
  const auto graph = build_review_graph(recs);
  const auto labels = labels_of(recs);
  std::vector<std::string> texts;
  for (const auto& r : recs) texts.push_back(r.text);
  const auto x = hash_embed(texts, 64, seed);
  const auto split = make_split(recs.size(), {0.01, 0.09, 0.90}, seed);
  ModelConfig mcfg;
  mcfg.emb_dim = x.cols();
  TrainConfig tcfg;
  tcfg.seed = seed;
  const TrainData data{&graph, &x, nullptr, &split, labels};
  PipelineArtifacts out;
  const auto result = train(data, mcfg, tcfg, [&](const EpochLog& row) {
    out.log += epoch_log_json(row) + "\n";
  });
  out.best_valid_auc = result.best_valid_auc.value_or(0.0);
  out.checkpoint = encode_checkpoint(result.best);
  const auto scores = score_nodes(result.best, data);
  std::vector<double> s;
  std::vector<int> y;
  for (auto i : split.nodes(SplitTag::test)) {
    s.push_back(scores[i]);
    y.push_back(labels[i] == Label::spam ? 1 : 0);
  }
  out.metrics = metrics_json(auc(s, y), precision_recall_at_ratio(s, y, 0.2), 0.2, s.size());
  return out;
}

Outcome learnability() {
  const auto recs = ingest_reviews(SPAMGRAPH_DATA_DIR "/separable300.jsonl", InputFormat::jsonl);
  std::string detail;
  bool pass = recs.size() == 300;
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto t0 = Clock::now();
    const auto a = run_pipeline(recs, seed);
    const double secs = seconds_since(t0);
    pass = pass && a.best_valid_auc >= 0.95 && secs < 60.0;
    detail += "seed " + std::to_string(seed) + ": valid AUC " + fmt(a.best_valid_auc) + " in " +
              fmt(secs) + " s; ";
  }
  const auto again = run_pipeline(recs, 0);
  const bool same = again.log == run_pipeline(recs, 0).log;
  pass = pass && same;
  detail += same ? "repeat run identical" : "repeat run differs";
  return {pass, detail};
}

// ----------------------------------------------------------------------- 7

Outcome injection_arithmetic() {
  const auto base = make_base_corpus({});
  PlanOptions opts;
  opts.seed = 7;
  auto plan = make_synthesis_plan(base, opts);
  StubChatClient stub(7);
  fill_plan_texts(plan, stub, {});
  const auto out = inject_spam(base, plan, 7);

  std::map<std::string, std::int64_t> first;
  for (const auto& r : base) {
    auto [it, fresh] = first.emplace(r.product_id, r.timestamp);
    if (!fresh) it->second = std::min(it->second, r.timestamp);
  }
  std::size_t spam = 0;
  bool ratings = true;
  bool windows = true;
  bool genuine_intact = true;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& r = out[i];
    if (i < base.size()) {
      auto expect = base[i];
      expect.label = Label::normal;
      genuine_intact = genuine_intact && r == expect;
      continue;
    }
    ++spam;
    ratings = ratings && r.rating == 5 && r.label == Label::spam;
    const auto t0 = first.at(r.product_id);
    windows = windows && r.timestamp >= t0 && r.timestamp <= t0 + 432000;
  }
  const double closed_form = 2500.0 / (static_cast<double>(base.size()) + 2500.0);
  const double observed = static_cast<double>(spam) / static_cast<double>(out.size());
  const bool pass = plan.targets.size() == 500 && spam == 2500 &&
                    std::abs(observed - closed_form) <= 1e-4 && ratings && windows &&
                    genuine_intact;
  return {pass, std::to_string(spam) + " spam over " + std::to_string(out.size()) +
                    " reviews, fraction " + fmt(observed) + " vs " + fmt(closed_form) +
                    (ratings ? ", ratings ok" : ", bad ratings") +
                    (windows ? ", windows ok" : ", timestamp outside window")};
}

// ----------------------------------------------------------------------- 8

Outcome bleu_oracle() {
  Rng rng(88);
  const std::vector<std::string> vocab{"the", "cat", "sat", "on", "mat", "a", "dog", "ran"};
  auto sentence = [&](std::size_t len) {
    std::vector<std::string> s;
    for (std::size_t i = 0; i < len; ++i) s.push_back(vocab[rng.below(vocab.size())]);
    return s;
  };
  auto join = [](const std::vector<std::string>& toks) {
    std::string s;
    for (const auto& t : toks) s += (s.empty() ? "" : " ") + t;
    return s;
  };
  double worst = 0.0;
  std::size_t nonzero = 0;
  for (int t = 0; t < 50; ++t) {
    const auto ref = sentence(static_cast<std::size_t>(rng.between(4, 20)));
    auto cand = ref;
    // Mutate a few positions so precisions land strictly between 0 and 1.
    const auto edits = rng.below(4);
    for (std::uint64_t e = 0; e < edits; ++e) cand[rng.below(cand.size())] = vocab[rng.below(8)];
    if (rng.below(2)) cand.resize(std::max<std::size_t>(4, cand.size() - rng.below(4)));
    const bool smooth = t % 5 == 4;
    const double got = sentence_bleu(join(cand), join(ref), {4, smooth});
    const double want = oracle::bleu(cand, ref, 4, smooth);
    worst = std::max(worst, std::abs(got - want));
    nonzero += got > 0.0 ? 1 : 0;
    // Group statistic: mean over ordered pairs equals the oracle mean.
    const std::vector<std::string> group{join(cand), join(ref)};
    const double pair_mean = (oracle::bleu(cand, ref) + oracle::bleu(ref, cand)) / 2.0;
    worst = std::max(worst, std::abs(corpus_stats({group}).mean_pairwise_bleu - pair_mean));
  }
  const auto identical = corpus_stats({{"one two three four five", "one two three four five",
                                        "one two three four five"}});
  const bool pass = worst <= 1e-9 && identical.mean_pairwise_bleu == 1.0;
  return {pass, "50 pairs (" + std::to_string(nonzero) + " nonzero), max diff " + fmt(worst) +
                    ", identical group " + fmt(identical.mean_pairwise_bleu)};
}

// ----------------------------------------------------------------------- 9

Outcome parsing_robustness() {
  std::size_t expected = 0;
  std::size_t recovered = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    GenerationRequest req;
    req.product_name = "Gadget " + std::to_string(rng.below(100));
    req.product_category = "Home";
    req.product_description = "A useful gadget.";
    req.reference_reviews = {"It is fine."};
    req.review_number = static_cast<std::size_t>(rng.between(1, 8));
    StubChatClient stub(seed);
    const auto prompt = render_generation_prompt(req);
    const auto truth = stub.reviews_for(prompt);
    const auto parsed = parse_reviews(generate_reviews(req, stub), req.review_number);
    expected += truth.size();
    for (std::size_t k = 0; k < truth.size() && k < parsed.reviews.size(); ++k) {
      recovered += parsed.reviews[k] == truth[k] ? 1 : 0;
    }
  }
  const double rate = static_cast<double>(recovered) / static_cast<double>(expected);
  return {rate >= 0.995, std::to_string(recovered) + "/" + std::to_string(expected) +
                             " reviews recovered (" + fmt(100.0 * rate) + "%)"};
}

// ---------------------------------------------------------------------- 10

Outcome determinism() {
  const auto recs = make_separable_corpus({.seed = 3});
  const auto a = run_pipeline(recs, 42);
  const auto b = run_pipeline(recs, 42);
  const bool pass = a.checkpoint == b.checkpoint && a.metrics == b.metrics && a.log == b.log;
  return {pass, "checkpoint " + std::to_string(a.checkpoint.size()) + " bytes " +
                    (a.checkpoint == b.checkpoint ? "identical" : "differ") + ", metrics JSON " +
                    (a.metrics == b.metrics ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_check},
      {"dense-oracle equivalence", dense_oracle},
      {"graph-builder oracle", graph_oracle},
      {"AUC oracle", auc_oracle},
      {"label-mask leakage", label_leakage},
      {"end-to-end learnability", learnability},
      {"injection arithmetic", injection_arithmetic},
      {"BLEU oracle", bleu_oracle},
      {"parsing robustness", parsing_robustness},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << (k + 1) << "] " << criteria[k].first
              << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
