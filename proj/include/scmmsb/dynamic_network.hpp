#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace scmmsb {

// An unordered dyad at a time step, normalized to p < q.
struct DyadIndex {
  int t = 0;
  int p = 0;
  int q = 0;

  friend bool operator==(const DyadIndex&, const DyadIndex&) = default;
};

// Canonical index of the dyad (p, q), p < q, within the N(N-1)/2 unordered
// pairs of one snapshot, in p-major order.
inline std::size_t dyad_offset(int num_nodes, int p, int q) {
  std::size_t n = static_cast<std::size_t>(num_nodes);
  std::size_t sp = static_cast<std::size_t>(p);
  return sp * (2 * n - sp - 1) / 2 + static_cast<std::size_t>(q - p - 1);
}

inline std::size_t dyads_per_step(int num_nodes) {
  std::size_t n = static_cast<std::size_t>(num_nodes);
  return n * (n - 1) / 2;
}

// A fixed node set observed over T undirected, unweighted snapshots.
// Immutable after construction; safe to share across threads.
class DynamicNetwork {
 public:
  using Edge = std::pair<int, int>;  // (p, q) with p < q

  // Edges are (t, u, v) triples in any order; (t, u, v) and (t, v, u) name
  // the same edge and listing both is a duplicate error.
  DynamicNetwork(int num_nodes, int num_steps,
                 const std::vector<std::tuple<int, int, int>>& edges);

  int num_nodes() const { return num_nodes_; }
  int num_steps() const { return num_steps_; }

  std::span<const Edge> edges(int t) const {
    return {edges_[t].data(), edges_[t].size()};
  }
  std::size_t num_edges(int t) const { return edges_[t].size(); }
  std::size_t num_edges_total() const;

  // Neighbor set m(p)^t, sorted ascending.
  std::span<const int> neighbors(int p, int t) const {
    return {adj_[t][p].data(), adj_[t][p].size()};
  }
  int degree(int p, int t) const { return static_cast<int>(adj_[t][p].size()); }

  bool has_edge(int t, int p, int q) const;

  void check_node(int p) const;
  void check_step(int t) const;

 private:
  int num_nodes_;
  int num_steps_;
  std::vector<std::vector<Edge>> edges_;            // per t, sorted
  std::vector<std::vector<std::vector<int>>> adj_;  // [t][p] sorted neighbor ids
  std::vector<std::vector<std::uint8_t>> dense_;    // [t][p*N+q] adjacency
};

// Reads the edge-list format: one `t u v` triple of base-10 integers per
// line, ASCII whitespace separated; `#`-prefixed lines are comments.
// N and T are given by the caller, never inferred from the file.
DynamicNetwork load_snapshots(const std::string& path, int num_nodes,
                              int num_steps);
DynamicNetwork read_snapshots(std::istream& in, const std::string& name,
                              int num_nodes, int num_steps);

// Writes the same format (tab separated, edges in canonical order).
void save_snapshots(const DynamicNetwork& net, const std::string& path);
void write_snapshots(const DynamicNetwork& net, std::ostream& out);

}  // namespace scmmsb
