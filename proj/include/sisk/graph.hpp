#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sisk {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Immutable undirected simple graph in compressed (CSR) adjacency form.
///
/// Neighbor lists are sorted. The CSR slot of neighbor k in the list of j is
/// the dense index of the directed edge (j -> k), see DirectedEdgeIndex.
class Graph {
public:
    Graph() = default;

    /// Builds a simple graph on nodes 0..n-1. Self-loops and repeated edges
    /// (in either orientation) are dropped and counted in the out-params.
    static Graph from_edges(std::size_t n, std::span<const Edge> edges,
                            std::size_t* self_loops = nullptr,
                            std::size_t* duplicates = nullptr);

    std::size_t num_nodes() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t num_edges() const noexcept { return targets_.size() / 2; }
    std::size_t num_directed_edges() const noexcept { return targets_.size(); }

    std::span<const NodeId> neighbors(NodeId v) const {
        return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
    }
    std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
    std::size_t max_degree() const;

    // First directed-edge slot of node v.
    std::size_t offset(NodeId v) const { return offsets_[v]; }
    NodeId target(std::size_t directed_edge) const { return targets_[directed_edge]; }

    bool has_edge(NodeId u, NodeId v) const;

    /// Undirected edges with u < v, in CSR order.
    std::vector<Edge> edges() const;

    /// Original node labels (empty when the graph was generated).
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    void set_labels(std::vector<std::string> labels);
    std::string label(NodeId v) const;

    /// FNV-1a hash over the canonical sorted edge list; used in run manifests.
    std::uint64_t content_hash() const;

private:
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> targets_;
    std::vector<std::string> labels_;
};

/// Dense numbering of directed edges: (j -> k) for every undirected edge {j, k}.
///
/// Index e of (j -> k) is the CSR slot of k in adj(j). The index stores the
/// source of each slot and the slot of the reversed edge.
class DirectedEdgeIndex {
public:
    explicit DirectedEdgeIndex(const Graph& g);

    std::size_t size() const noexcept { return source_.size(); }
    NodeId source(std::size_t e) const { return source_[e]; }
    NodeId target(std::size_t e) const { return graph_->target(e); }
    std::size_t reverse(std::size_t e) const { return reverse_[e]; }
    std::optional<std::size_t> find(NodeId j, NodeId k) const;

    const Graph& graph() const noexcept { return *graph_; }

private:
    const Graph* graph_;
    std::vector<NodeId> source_;
    std::vector<std::size_t> reverse_;
};

struct LoadedGraph {
    Graph graph;
    std::size_t dropped_self_loops = 0;
    std::size_t dropped_duplicates = 0;
};

/// Reads a whitespace-separated edge list. Lines starting with '#' and blank
/// lines are ignored; labels are arbitrary tokens mapped to 0..n-1 in order of
/// first appearance.
LoadedGraph load_edge_list(const std::filesystem::path& path);
LoadedGraph read_edge_list(std::istream& in, const std::string& source_name = "<stream>");

void write_edge_list(const Graph& g, std::ostream& out);
void save_edge_list(const Graph& g, const std::filesystem::path& path);

/// Uniform-ish simple random regular graph: configuration model, repaired by
/// double-edge swaps (at most 200*m attempts, then a full resample).
Graph generate_random_regular(std::size_t n, std::size_t degree, std::uint64_t seed);

/// Erdos-Renyi G(n, p).
Graph generate_gnp(std::size_t n, double p, std::uint64_t seed);

/// Largest eigenvalue of the adjacency matrix by power iteration.
double spectral_radius(const Graph& g, double tol = 1e-12);

/// q = 2m/n - 1, one less than the mean degree.
double mean_excess_degree(const Graph& g);

} // namespace sisk
