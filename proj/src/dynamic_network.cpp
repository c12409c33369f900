#include "scmmsb/dynamic_network.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "scmmsb/errors.hpp"

namespace scmmsb {

DynamicNetwork::DynamicNetwork(
    int num_nodes, int num_steps,
    const std::vector<std::tuple<int, int, int>>& edges)
    : num_nodes_(num_nodes), num_steps_(num_steps) {
  if (num_nodes_ < 2) throw DataError("network needs at least 2 nodes");
  if (num_steps_ < 1) throw DataError("network needs at least 1 snapshot");

  edges_.resize(num_steps_);
  adj_.assign(num_steps_, std::vector<std::vector<int>>(num_nodes_));
  dense_.assign(num_steps_,
                std::vector<std::uint8_t>(
                    static_cast<std::size_t>(num_nodes_) * num_nodes_, 0));

  for (auto [t, u, v] : edges) {
    if (t < 0 || t >= num_steps_) {
      throw DimensionError("edge time " + std::to_string(t) + " outside [0, " +
                           std::to_string(num_steps_) + ")");
    }
    if (u < 0 || u >= num_nodes_ || v < 0 || v >= num_nodes_) {
      throw DimensionError("edge (" + std::to_string(u) + ", " +
                           std::to_string(v) + ") has a node outside [0, " +
                           std::to_string(num_nodes_) + ")");
    }
    if (u == v) {
      throw DataError("self-loop at node " + std::to_string(u) + ", time " +
                      std::to_string(t));
    }
    int p = std::min(u, v);
    int q = std::max(u, v);
    auto& cell = dense_[t][static_cast<std::size_t>(p) * num_nodes_ + q];
    if (cell) {
      throw DataError("duplicate edge (" + std::to_string(p) + ", " +
                      std::to_string(q) + ") at time " + std::to_string(t));
    }
    cell = 1;
    dense_[t][static_cast<std::size_t>(q) * num_nodes_ + p] = 1;
    edges_[t].emplace_back(p, q);
    adj_[t][p].push_back(q);
    adj_[t][q].push_back(p);
  }

  for (int t = 0; t < num_steps_; ++t) {
    std::sort(edges_[t].begin(), edges_[t].end());
    for (auto& nb : adj_[t]) std::sort(nb.begin(), nb.end());
  }
}

std::size_t DynamicNetwork::num_edges_total() const {
  std::size_t n = 0;
  for (const auto& e : edges_) n += e.size();
  return n;
}

bool DynamicNetwork::has_edge(int t, int p, int q) const {
  check_step(t);
  check_node(p);
  check_node(q);
  return dense_[t][static_cast<std::size_t>(p) * num_nodes_ + q] != 0;
}

void DynamicNetwork::check_node(int p) const {
  if (p < 0 || p >= num_nodes_) {
    throw DataError("node id " + std::to_string(p) + " outside [0, " +
                    std::to_string(num_nodes_) + ")");
  }
}

void DynamicNetwork::check_step(int t) const {
  if (t < 0 || t >= num_steps_) {
    throw DataError("time index " + std::to_string(t) + " outside [0, " +
                    std::to_string(num_steps_) + ")");
  }
}

DynamicNetwork read_snapshots(std::istream& in, const std::string& name,
                              int num_nodes, int num_steps) {
  if (num_nodes < 2) throw DataError("network needs at least 2 nodes");
  if (num_steps < 1) throw DataError("network needs at least 1 snapshot");
  std::vector<std::tuple<int, int, int>> edges;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(num_steps) *
                                     num_nodes * num_nodes,
                                 0);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string where = name + ":" + std::to_string(line_no);
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long t = 0, u = 0, v = 0;
    char extra = 0;
    if (!(fields >> t >> u >> v) || (fields >> extra)) {
      throw DataError(where + ": expected three integers `t u v`");
    }
    if (t < 0 || t >= num_steps) {
      throw DimensionError(where + ": time " + std::to_string(t) +
                           " outside [0, " + std::to_string(num_steps) + ")");
    }
    if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes) {
      throw DimensionError(where + ": node outside [0, " +
                           std::to_string(num_nodes) + ")");
    }
    if (u == v) {
      throw DataError(where + ": self-loop at node " + std::to_string(u));
    }
    long p = std::min(u, v);
    long q = std::max(u, v);
    auto& cell =
        seen[(static_cast<std::size_t>(t) * num_nodes + p) * num_nodes + q];
    if (cell) {
      throw DataError(where + ": duplicate edge (" + std::to_string(p) + ", " +
                      std::to_string(q) + ") at time " + std::to_string(t));
    }
    cell = 1;
    edges.emplace_back(static_cast<int>(t), static_cast<int>(u),
                       static_cast<int>(v));
  }
  return DynamicNetwork(num_nodes, num_steps, edges);
}

DynamicNetwork load_snapshots(const std::string& path, int num_nodes,
                              int num_steps) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list: " + path);
  return read_snapshots(in, path, num_nodes, num_steps);
}

void write_snapshots(const DynamicNetwork& net, std::ostream& out) {
  for (int t = 0; t < net.num_steps(); ++t) {
    for (const auto& [p, q] : net.edges(t)) {
      out << t << '\t' << p << '\t' << q << '\n';
    }
  }
}

void save_snapshots(const DynamicNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write edge list: " + path);
  write_snapshots(net, out);
  if (!out.good()) throw DataError("write failed: " + path);
}

}  // namespace scmmsb
