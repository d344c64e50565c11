#include "spamgraph/graph.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include <json.hpp>

#include "binary_io.hpp"
#include "spamgraph/error.hpp"

namespace spamgraph {

std::vector<NodePair> group_clique_edges(const std::vector<std::vector<std::uint32_t>>& groups) {
  std::size_t total = 0;
  for (const auto& g : groups) total += g.size() * (g.size() - (g.empty() ? 0 : 1)) / 2;
  std::vector<NodePair> edges;
  edges.reserve(total);
  for (const auto& g : groups) {
    for (std::size_t a = 0; a < g.size(); ++a) {
      for (std::size_t b = a + 1; b < g.size(); ++b) {
        edges.emplace_back(std::min(g[a], g[b]), std::max(g[a], g[b]));
      }
    }
  }
  return edges;
}

ReviewGraph::ReviewGraph(std::vector<std::uint64_t> offset_array,
                         std::vector<std::uint32_t> neighbor_array,
                         std::vector<std::uint8_t> tag_array, std::vector<Label> labels)
    : offsets_(std::move(offset_array)),
      neighbors_(std::move(neighbor_array)),
      tags_(std::move(tag_array)) {
  if (offsets_.empty()) throw FormatError("graph offsets must have n+1 entries");
  if (offsets_.front() != 0 || offsets_.back() != neighbors_.size()) {
    throw FormatError("graph offsets do not span the neighbor array");
  }
  if (tags_.size() != neighbors_.size()) throw FormatError("graph tag array size mismatch");
  const std::size_t n = num_nodes();
  for (std::size_t i = 0; i < n; ++i) {
    if (offsets_[i] > offsets_[i + 1]) throw FormatError("graph offsets are not monotone");
    const auto nb = neighbors(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if (nb[k] >= n) throw FormatError("graph neighbor index out of range");
      if (k > 0 && nb[k - 1] >= nb[k]) {
        throw FormatError("graph neighbor list of node " + std::to_string(i) +
                          " is not strictly ascending");
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : neighbors(i)) {
      if (!contains(j, i)) {
        throw FormatError("graph is not symmetric at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
      }
    }
  }
  set_labels(std::move(labels));
}

ReviewGraph ReviewGraph::from_edges(std::size_t n_nodes, std::span<const TaggedEdge> edges,
                                    std::vector<Label> labels) {
  if (n_nodes > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("graph too large for 32-bit node ids");
  }
  struct Entry {
    std::uint64_t key;
    std::uint8_t tags;
  };
  std::vector<Entry> entries;
  entries.reserve(edges.size() * 2 + n_nodes);
  for (const auto& e : edges) {
    if (e.u >= n_nodes || e.v >= n_nodes) throw InvalidArgument("edge endpoint out of range");
    if (e.u == e.v) continue;
    entries.push_back({(std::uint64_t{e.u} << 32) | e.v, e.tags});
    entries.push_back({(std::uint64_t{e.v} << 32) | e.u, e.tags});
  }
  for (std::uint64_t i = 0; i < n_nodes; ++i) entries.push_back({(i << 32) | i, relation::kSelfLoop});
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.key < b.key; });

  std::vector<std::uint64_t> offsets(n_nodes + 1, 0);
  std::vector<std::uint32_t> neighbors;
  std::vector<std::uint8_t> tags;
  neighbors.reserve(entries.size());
  tags.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size();) {
    const auto key = entries[k].key;
    std::uint8_t merged = 0;
    while (k < entries.size() && entries[k].key == key) merged |= entries[k++].tags;
    const auto src = static_cast<std::size_t>(key >> 32);
    neighbors.push_back(static_cast<std::uint32_t>(key & 0xffffffffULL));
    tags.push_back(merged);
    ++offsets[src + 1];
  }
  for (std::size_t i = 0; i < n_nodes; ++i) offsets[i + 1] += offsets[i];

  ReviewGraph g;
  g.offsets_ = std::move(offsets);
  g.neighbors_ = std::move(neighbors);
  g.tags_ = std::move(tags);
  g.set_labels(std::move(labels));
  return g;
}

std::size_t ReviewGraph::num_self_loops() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < num_nodes(); ++i) count += contains(i, i) ? 1 : 0;
  return count;
}

bool ReviewGraph::contains(std::size_t u, std::size_t v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), static_cast<std::uint32_t>(v));
}

std::uint8_t ReviewGraph::tag(std::size_t u, std::size_t v) const {
  const auto nb = neighbors(u);
  const auto it = std::lower_bound(nb.begin(), nb.end(), static_cast<std::uint32_t>(v));
  if (it == nb.end() || *it != v) return 0;
  return tags_[offsets_[u] + static_cast<std::size_t>(it - nb.begin())];
}

void ReviewGraph::set_labels(std::vector<Label> labels) {
  if (labels.empty()) labels.assign(num_nodes(), Label::unknown);
  if (labels.size() != num_nodes()) {
    throw InvalidArgument("label count " + std::to_string(labels.size()) +
                          " does not match node count " + std::to_string(num_nodes()));
  }
  labels_ = std::move(labels);
}

std::vector<TaggedEdge> ReviewGraph::relation_edges() const {
  std::vector<TaggedEdge> out;
  for (std::size_t u = 0; u < num_nodes(); ++u) {
    const auto nb = neighbors(u);
    const auto tg = tags(u);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if (nb[k] > u) {
        out.push_back({static_cast<std::uint32_t>(u), nb[k],
                       static_cast<std::uint8_t>(tg[k] & ~relation::kSelfLoop)});
      }
    }
  }
  return out;
}

namespace {

using GroupMap = std::unordered_map<std::string, std::vector<std::uint32_t>>;

void emit_groups(const GroupMap& groups, std::uint8_t tag, const GraphBuildOptions& options,
                 std::vector<TaggedEdge>& out) {
  std::vector<std::vector<std::uint32_t>> kept;
  kept.reserve(groups.size());
  for (const auto& [key, members] : groups) {
    if (options.max_group_size != 0 && members.size() > options.max_group_size) continue;
    kept.push_back(members);
  }
  for (const auto& [u, v] : group_clique_edges(kept)) out.push_back({u, v, tag});
}

std::string month_key(const std::string& id, std::int64_t ts) {
  const auto ym = utc_year_month(ts);
  return id + '\x1f' + std::to_string(ym.year) + '-' + std::to_string(ym.month);
}

}  // namespace

ReviewGraph build_review_graph(std::span<const ReviewRecord> records,
                               const GraphBuildOptions& options) {
  GroupMap by_user, by_product_rating, by_product_month;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.review_id != i) throw InvalidArgument("review ids must be dense and in order");
    const auto id = static_cast<std::uint32_t>(i);
    by_user[r.user_id].push_back(id);
    by_product_rating[r.product_id + '\x1f' + std::to_string(r.rating)].push_back(id);
    by_product_month[month_key(r.product_id, r.timestamp)].push_back(id);
  }
  std::vector<TaggedEdge> edges;
  emit_groups(by_user, relation::kSameUser, options, edges);
  emit_groups(by_product_rating, relation::kSameProductRating, options, edges);
  emit_groups(by_product_month, relation::kSameProductMonth, options, edges);
  return ReviewGraph::from_edges(records.size(), edges, labels_of(records));
}

ReviewGraph build_qa_graph(std::span<const QARecord> records, const GraphBuildOptions& options) {
  GroupMap by_question, by_asker_month, by_answerer_month;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.qa_id != i) throw InvalidArgument("qa ids must be dense and in order");
    const auto id = static_cast<std::uint32_t>(i);
    by_question[r.question_id].push_back(id);
    by_asker_month[month_key(r.asker_id, r.question_time)].push_back(id);
    by_answerer_month[month_key(r.answerer_id, r.answer_time)].push_back(id);
  }
  std::vector<TaggedEdge> edges;
  emit_groups(by_question, relation::kSameQuestion, options, edges);
  emit_groups(by_asker_month, relation::kSameAskerMonth, options, edges);
  emit_groups(by_answerer_month, relation::kSameAnswererMonth, options, edges);
  return ReviewGraph::from_edges(records.size(), edges, labels_of(records));
}

// ---------------------------------------------------------------------------
// RGPH file format

std::vector<std::uint8_t> encode_graph(const ReviewGraph& graph) {
  detail::ByteWriter w;
  w.bytes("RGPH");
  w.u32(kGraphFormatVersion);
  w.u64(graph.num_nodes());
  w.u64(graph.num_entries());
  for (auto o : graph.offsets()) w.u64(o);
  for (auto v : graph.neighbor_array()) w.u32(v);
  for (auto t : graph.tag_array()) w.u8(t);
  return std::move(w.buffer());
}

ReviewGraph decode_graph(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "graph file");
  if (r.bytes(4) != "RGPH") throw FormatError("graph file: bad magic (expected RGPH)");
  const auto version = r.u32();
  if (version != kGraphFormatVersion) {
    throw FormatError("graph file: unsupported version " + std::to_string(version));
  }
  const auto n = r.u64();
  const auto entries = r.u64();
  if (n >= r.remaining() / 8 || entries > r.remaining() / 5) {
    throw FormatError("graph file: truncated payload for " + std::to_string(n) + " nodes and " +
                      std::to_string(entries) + " entries");
  }
  r.need((n + 1) * 8 + entries * 5);
  std::vector<std::uint64_t> offsets(n + 1);
  for (auto& o : offsets) o = r.u64();
  std::vector<std::uint32_t> neighbors(entries);
  for (auto& v : neighbors) v = r.u32();
  std::vector<std::uint8_t> tags(entries);
  for (auto& t : tags) t = r.u8();
  if (r.remaining() != 0) throw FormatError("graph file: trailing bytes after payload");
  return ReviewGraph(std::move(offsets), std::move(neighbors), std::move(tags));
}

void save_graph(const std::filesystem::path& path, const ReviewGraph& graph) {
  detail::write_file_bytes(path, encode_graph(graph));
}

ReviewGraph load_graph(const std::filesystem::path& path) {
  return decode_graph(detail::read_file_bytes(path));
}

GraphStats graph_stats(const ReviewGraph& graph) {
  GraphStats s;
  s.nodes = graph.num_nodes();
  s.directed_entries = graph.num_entries();
  s.self_loops = graph.num_self_loops();
  s.relation_edges = graph.num_relation_edges();
  for (const auto& e : graph.relation_edges()) {
    for (int b = 0; b < 3; ++b) {
      if (e.tags & (1u << b)) ++s.per_relation[b];
    }
  }
  for (Label l : graph.labels()) {
    if (l != Label::unknown) ++s.labeled_nodes;
    if (l == Label::spam) ++s.spam_nodes;
  }
  s.spam_ratio = s.nodes == 0 ? 0.0 : static_cast<double>(s.spam_nodes) / static_cast<double>(s.nodes);
  return s;
}

std::string graph_stats_json(const GraphStats& s) {
  nlohmann::ordered_json obj;
  obj["nodes"] = s.nodes;
  obj["edges"] = s.relation_edges;
  obj["directed_entries"] = s.directed_entries;
  obj["self_loops"] = s.self_loops;
  obj["spam_nodes"] = s.spam_nodes;
  obj["labeled_nodes"] = s.labeled_nodes;
  obj["spam_ratio"] = s.spam_ratio;
  obj["edges_by_relation"] = {s.per_relation[0], s.per_relation[1], s.per_relation[2]};
  return obj.dump(2);
}

}  // namespace spamgraph
