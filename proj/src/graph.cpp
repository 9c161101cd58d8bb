#include "sisk/graph.hpp"

#include "sisk/error.hpp"
#include "sisk/random.hpp"
#include "power_iteration.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

namespace sisk {

namespace {

std::uint64_t edge_key(NodeId u, NodeId v) {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(u) << 32) | v;
}

} // namespace

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges,
                        std::size_t* self_loops, std::size_t* duplicates) {
    std::vector<Edge> kept;
    kept.reserve(edges.size());
    std::size_t loops = 0;
    for (auto [u, v] : edges) {
        if (u >= n || v >= n) throw InputError("edge endpoint out of range");
        if (u == v) {
            ++loops;
            continue;
        }
        kept.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(kept.begin(), kept.end());
    const auto unique_end = std::unique(kept.begin(), kept.end());
    const std::size_t dups = static_cast<std::size_t>(kept.end() - unique_end);
    kept.erase(unique_end, kept.end());
    if (self_loops) *self_loops = loops;
    if (duplicates) *duplicates = dups;

    Graph g;
    g.offsets_.assign(n + 1, 0);
    for (auto [u, v] : kept) {
        ++g.offsets_[u + 1];
        ++g.offsets_[v + 1];
    }
    std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
    g.targets_.resize(2 * kept.size());
    std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    for (auto [u, v] : kept) {
        g.targets_[fill[u]++] = v;
        g.targets_[fill[v]++] = u;
    }
    for (std::size_t v = 0; v < n; ++v)
        std::sort(g.targets_.begin() + g.offsets_[v], g.targets_.begin() + g.offsets_[v + 1]);
    return g;
}

std::size_t Graph::max_degree() const {
    std::size_t d = 0;
    for (NodeId v = 0; v < num_nodes(); ++v) d = std::max(d, degree(v));
    return d;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
    const auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edges() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (NodeId u = 0; u < num_nodes(); ++u)
        for (NodeId v : neighbors(u))
            if (u < v) out.emplace_back(u, v);
    return out;
}

void Graph::set_labels(std::vector<std::string> labels) {
    if (!labels.empty() && labels.size() != num_nodes())
        throw InputError("label count does not match node count");
    labels_ = std::move(labels);
}

std::string Graph::label(NodeId v) const {
    return labels_.empty() ? std::to_string(v) : labels_[v];
}

std::uint64_t Graph::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(num_nodes());
    for (auto [u, v] : edges()) mix(edge_key(u, v));
    return h;
}

DirectedEdgeIndex::DirectedEdgeIndex(const Graph& g)
    : graph_(&g), source_(g.num_directed_edges()), reverse_(g.num_directed_edges()) {
    for (NodeId j = 0; j < g.num_nodes(); ++j) {
        const std::size_t base = g.offset(j);
        const auto nb = g.neighbors(j);
        for (std::size_t s = 0; s < nb.size(); ++s) {
            source_[base + s] = j;
            const NodeId k = nb[s];
            const auto back = g.neighbors(k);
            const auto it = std::lower_bound(back.begin(), back.end(), j);
            reverse_[base + s] = g.offset(k) + static_cast<std::size_t>(it - back.begin());
        }
    }
}

std::optional<std::size_t> DirectedEdgeIndex::find(NodeId j, NodeId k) const {
    if (j >= graph_->num_nodes()) return std::nullopt;
    const auto nb = graph_->neighbors(j);
    const auto it = std::lower_bound(nb.begin(), nb.end(), k);
    if (it == nb.end() || *it != k) return std::nullopt;
    return graph_->offset(j) + static_cast<std::size_t>(it - nb.begin());
}

LoadedGraph read_edge_list(std::istream& in, const std::string& source_name) {
    std::unordered_map<std::string, NodeId> ids;
    std::vector<std::string> labels;
    std::vector<Edge> edges;
    auto intern = [&](const std::string& label) {
        auto [it, inserted] = ids.try_emplace(label, static_cast<NodeId>(labels.size()));
        if (inserted) labels.push_back(label);
        return it->second;
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream tokens(line);
        std::string a, b, extra;
        tokens >> a >> b;
        if (b.empty() || (tokens >> extra))
            throw ParseError(source_name, lineno, "expected exactly two node labels");
        const NodeId u = intern(a);
        const NodeId v = intern(b);
        edges.emplace_back(u, v);
    }
    if (in.bad()) throw InputError("failed reading " + source_name);

    LoadedGraph out;
    out.graph = Graph::from_edges(labels.size(), edges, &out.dropped_self_loops,
                                  &out.dropped_duplicates);
    out.graph.set_labels(std::move(labels));
    return out;
}

LoadedGraph load_edge_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open edge list '" + path.string() + "'");
    return read_edge_list(in, path.string());
}

void write_edge_list(const Graph& g, std::ostream& out) {
    for (auto [u, v] : g.edges()) out << g.label(u) << ' ' << g.label(v) << '\n';
}

void save_edge_list(const Graph& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    write_edge_list(g, out);
}

Graph generate_random_regular(std::size_t n, std::size_t degree, std::uint64_t seed) {
    if ((n * degree) % 2 != 0)
        throw InputError("random regular graph needs n*degree even (got n=" + std::to_string(n) +
                         ", degree=" + std::to_string(degree) + ")");
    if (degree >= n && !(n == 0 && degree == 0))
        throw InputError("random regular graph needs degree < n");
    const std::size_t m = n * degree / 2;
    Rng rng = make_rng(seed);

    std::vector<NodeId> stubs(2 * m);
    std::vector<Edge> edges(m);
    std::unordered_map<std::uint64_t, int> multiplicity;
    multiplicity.reserve(2 * m);

    auto is_bad = [&](const Edge& e) {
        return e.first == e.second || multiplicity[edge_key(e.first, e.second)] > 1;
    };

    while (true) {
        for (std::size_t i = 0; i < 2 * m; ++i) stubs[i] = static_cast<NodeId>(i / degree);
        for (std::size_t i = stubs.size(); i > 1; --i)
            std::swap(stubs[i - 1], stubs[uniform_index(rng, i)]);
        multiplicity.clear();
        for (std::size_t i = 0; i < m; ++i) {
            edges[i] = {stubs[2 * i], stubs[2 * i + 1]};
            ++multiplicity[edge_key(edges[i].first, edges[i].second)];
        }

        std::vector<std::size_t> bad;
        auto collect_bad = [&] {
            bad.clear();
            for (std::size_t i = 0; i < m; ++i)
                if (is_bad(edges[i])) bad.push_back(i);
        };
        collect_bad();
        const std::size_t max_attempts = 200 * std::max<std::size_t>(m, 1);
        for (std::size_t attempt = 0; attempt < max_attempts && !bad.empty(); ++attempt) {
            const std::size_t i = bad[uniform_index(rng, bad.size())];
            const std::size_t j = uniform_index(rng, m);
            if (i == j) continue;
            auto [u, v] = edges[i];
            auto [x, y] = edges[j];
            if (uniform_index(rng, 2) == 1) std::swap(x, y);
            // (u,v),(x,y) -> (u,x),(v,y)
            if (u == x || v == y) continue;
            const auto k1 = edge_key(u, x);
            const auto k2 = edge_key(v, y);
            if (k1 == k2) continue;
            if (multiplicity[k1] > 0 || multiplicity[k2] > 0) continue;
            --multiplicity[edge_key(u, v)];
            --multiplicity[edge_key(x, y)];
            ++multiplicity[k1];
            ++multiplicity[k2];
            edges[i] = {u, x};
            edges[j] = {v, y};
            collect_bad();
        }
        if (bad.empty()) break;
    }
    return Graph::from_edges(n, edges);
}

Graph generate_gnp(std::size_t n, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("G(n,p) needs p in [0, 1]");
    Rng rng = make_rng(seed);
    std::vector<Edge> edges;
    if (p > 0.0) {
        // Geometric skipping over the n(n-1)/2 candidate pairs.
        const double log_q = std::log1p(-p);
        std::int64_t v = 1, w = -1;
        const auto nn = static_cast<std::int64_t>(n);
        while (v < nn) {
            const double r = uniform01(rng);
            w += 1 + (p >= 1.0 ? 0 : static_cast<std::int64_t>(std::floor(std::log1p(-r) / log_q)));
            while (w >= v && v < nn) {
                w -= v;
                ++v;
            }
            if (v < nn) edges.emplace_back(static_cast<NodeId>(w), static_cast<NodeId>(v));
        }
    }
    return Graph::from_edges(n, edges);
}

double spectral_radius(const Graph& g, double tol) {
    if (g.num_nodes() == 0) throw InputError("spectral radius of an empty graph");
    if (!(tol > 0.0)) throw InputError("tolerance must be positive");
    if (g.num_edges() == 0) return 0.0;
    const std::size_t n = g.num_nodes();
    auto apply = [&g, n](const std::vector<double>& x, std::vector<double>& y) {
        for (NodeId v = 0; v < n; ++v) {
            double s = 0.0;
            for (NodeId u : g.neighbors(v)) s += x[u];
            y[v] = s;
        }
    };
    // The unit shift breaks the +/- lambda tie of bipartite graphs.
    return detail::largest_eigenvalue_symmetric(n, apply, 1.0, tol).value;
}

double mean_excess_degree(const Graph& g) {
    if (g.num_nodes() == 0) throw InputError("mean excess degree of an empty graph");
    return 2.0 * static_cast<double>(g.num_edges()) / static_cast<double>(g.num_nodes()) - 1.0;
}

} // namespace sisk
