#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spamgraph/records.hpp"

namespace spamgraph {

// Per-entry relation bitmask. Review and QA graphs share the bit layout; the
// three relation bits mean different rules in each.
namespace relation {
inline constexpr std::uint8_t kSameUser = 1;            // review: same user_id
inline constexpr std::uint8_t kSameProductRating = 2;   // review: same product and rating
inline constexpr std::uint8_t kSameProductMonth = 4;    // review: same product and UTC month
inline constexpr std::uint8_t kSameQuestion = 1;        // QA: same question_id
inline constexpr std::uint8_t kSameAskerMonth = 2;      // QA: same asker, question month
inline constexpr std::uint8_t kSameAnswererMonth = 4;   // QA: same answerer, answer month
inline constexpr std::uint8_t kSelfLoop = 8;
}  // namespace relation

// Undirected edge with first < second.
using NodePair = std::pair<std::uint32_t, std::uint32_t>;

// One edge per unordered pair inside each group (clique expansion). Pairs
// are emitted as (smaller, larger) in group order.
std::vector<NodePair> group_clique_edges(const std::vector<std::vector<std::uint32_t>>& groups);

struct TaggedEdge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  std::uint8_t tags = 0;
};

// Immutable CSR adjacency. Neighbor lists are sorted ascending and contain
// the node itself (self-loop).
class ReviewGraph {
 public:
  ReviewGraph() = default;
  // Validates the CSR invariants (monotone offsets, sorted unique neighbors,
  // symmetry).
  ReviewGraph(std::vector<std::uint64_t> offsets, std::vector<std::uint32_t> neighbors,
              std::vector<std::uint8_t> tags, std::vector<Label> labels = {});

  // Relation edges are symmetrized, deduplicated (tags OR-ed) and a self-loop
  // is appended to every node.
  static ReviewGraph from_edges(std::size_t n_nodes, std::span<const TaggedEdge> edges,
                                std::vector<Label> labels = {});

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_entries() const { return neighbors_.size(); }
  std::size_t num_self_loops() const;
  std::size_t num_relation_edges() const { return (num_entries() - num_self_loops()) / 2; }

  std::span<const std::uint32_t> neighbors(std::size_t node) const {
    return {neighbors_.data() + offsets_[node], neighbors_.data() + offsets_[node + 1]};
  }
  std::span<const std::uint8_t> tags(std::size_t node) const {
    return {tags_.data() + offsets_[node], tags_.data() + offsets_[node + 1]};
  }
  std::size_t degree(std::size_t node) const { return offsets_[node + 1] - offsets_[node]; }
  bool contains(std::size_t u, std::size_t v) const;
  // Relation tags of entry (u, v); 0 when absent.
  std::uint8_t tag(std::size_t u, std::size_t v) const;

  const std::vector<std::uint64_t>& offsets() const { return offsets_; }
  const std::vector<std::uint32_t>& neighbor_array() const { return neighbors_; }
  const std::vector<std::uint8_t>& tag_array() const { return tags_; }

  const std::vector<Label>& labels() const { return labels_; }
  void set_labels(std::vector<Label> labels);

  // Undirected relation edges (u < v), excluding self-loops, in CSR order.
  std::vector<TaggedEdge> relation_edges() const;

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint32_t> neighbors_;
  std::vector<std::uint8_t> tags_;
  std::vector<Label> labels_;
};

struct GraphBuildOptions {
  // Groups larger than this are skipped entirely; 0 disables the cap.
  std::size_t max_group_size = 0;
};

ReviewGraph build_review_graph(std::span<const ReviewRecord> records,
                               const GraphBuildOptions& options = {});
ReviewGraph build_qa_graph(std::span<const QARecord> records,
                           const GraphBuildOptions& options = {});

// RGPH binary format: magic "RGPH", u32 version, u64 n_nodes,
// u64 n_directed_entries, offsets (u64 LE x n+1), neighbors (u32 LE),
// relation tags (u8 per entry). Labels are not stored.
inline constexpr std::uint32_t kGraphFormatVersion = 1;
void save_graph(const std::filesystem::path& path, const ReviewGraph& graph);
ReviewGraph load_graph(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_graph(const ReviewGraph& graph);
ReviewGraph decode_graph(std::span<const std::uint8_t> bytes);

struct GraphStats {
  std::size_t nodes = 0;
  std::size_t relation_edges = 0;  // undirected, excluding self-loops
  std::size_t directed_entries = 0;
  std::size_t self_loops = 0;
  std::size_t spam_nodes = 0;
  std::size_t labeled_nodes = 0;
  double spam_ratio = 0.0;  // spam / nodes
  std::size_t per_relation[3] = {0, 0, 0};
};
GraphStats graph_stats(const ReviewGraph& graph);
std::string graph_stats_json(const GraphStats& stats);

}  // namespace spamgraph
