#include "gfs/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "gfs/errors.hpp"
#include "gfs/rng.hpp"

namespace gfs {

namespace {

bool is_connected(int n, const std::vector<Edge>& edges) {
    if (n == 0) return false;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const Edge& e : edges) {
        adj[static_cast<std::size_t>(e.u)].push_back(e.v);
        adj[static_cast<std::size_t>(e.v)].push_back(e.u);
    }
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : adj[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == n;
}

}  // namespace

Graph::Graph(int node_count, std::vector<Edge> edges) : n_(node_count) {
    if (n_ <= 0) throw std::invalid_argument("graph needs at least one node");
    for (Edge& e : edges) {
        if (e.u < 0 || e.u >= n_ || e.v < 0 || e.v >= n_)
            throw std::invalid_argument("edge endpoint out of range");
        if (e.u == e.v)
            throw SelfLoop("self-loop at node " + std::to_string(e.u));
        if (e.u > e.v) std::swap(e.u, e.v);
        if (!(e.w > 0.0))
            throw std::invalid_argument("edge weight must be positive");
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (edges[i - 1].u == edges[i].u && edges[i - 1].v == edges[i].v)
            throw DuplicateEdge("duplicate edge (" + std::to_string(edges[i].u) +
                                ", " + std::to_string(edges[i].v) + ")");
    }
    edges_ = std::move(edges);
    connected_ = is_connected(n_, edges_);
}

LaplacianView build_laplacian(const Graph& g) {
    const int n = g.node_count();
    LaplacianView view;
    view.matrix = Eigen::MatrixXd::Zero(n, n);
    for (const Edge& e : g.edges()) {
        view.matrix(e.u, e.v) -= e.w;
        view.matrix(e.v, e.u) -= e.w;
        view.matrix(e.u, e.u) += e.w;
        view.matrix(e.v, e.v) += e.w;
    }
    view.degrees = view.matrix.diagonal();
    return view;
}

Graph gen_sensor_graph(int n, double radius, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("node count must be at least 2");
    if (!(radius > 0.0) || radius > std::sqrt(2.0) + 1e-15)
        throw std::invalid_argument("radius must be in (0, sqrt(2)]");
    const double theta = radius / 2.0;
    Rng rng(seed);
    for (int attempt = 0; attempt < 50; ++attempt) {
        std::vector<double> xs(static_cast<std::size_t>(n)), ys(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            xs[static_cast<std::size_t>(i)] = rng.uniform01();
            ys[static_cast<std::size_t>(i)] = rng.uniform01();
        }
        std::vector<Edge> edges;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double dx = xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)];
                const double dy = ys[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(j)];
                const double d2 = dx * dx + dy * dy;
                if (d2 <= radius * radius)
                    edges.push_back({i, j, std::exp(-d2 / (2.0 * theta * theta))});
            }
        }
        if (is_connected(n, edges)) return Graph(n, std::move(edges));
    }
    throw GenerationFailed("sensor graph stayed disconnected after 50 placements");
}

Graph gen_community_graph(int n, int communities, double p_in, double p_out,
                          std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("node count must be positive");
    if (communities < 1 || communities > n)
        throw std::invalid_argument("community count must be in [1, n]");
    if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0))
        throw std::invalid_argument("need 0 <= p_out < p_in <= 1");
    // Node i belongs to block floor(i * communities / n): blocks differ in
    // size by at most one and are contiguous in index order.
    std::vector<int> block(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        block[static_cast<std::size_t>(i)] =
            static_cast<int>((static_cast<long long>(i) * communities) / n);
    Rng rng(seed);
    for (int attempt = 0; attempt < 50; ++attempt) {
        std::vector<Edge> edges;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double p = block[static_cast<std::size_t>(i)] ==
                                         block[static_cast<std::size_t>(j)]
                                     ? p_in
                                     : p_out;
                if (rng.bernoulli(p)) edges.push_back({i, j, 1.0});
            }
        }
        if (is_connected(n, edges)) return Graph(n, std::move(edges));
    }
    throw GenerationFailed("community graph stayed disconnected after 50 draws");
}

Graph gen_cube_graph(int side, int dims) {
    if (side < 2) throw std::invalid_argument("side must be at least 2");
    if (dims < 1 || dims > 3) throw std::invalid_argument("dims must be 1, 2, or 3");
    long long total = 1;
    for (int d = 0; d < dims; ++d) total *= side;
    if (total > 1'000'000) throw std::invalid_argument("lattice too large");
    const int n = static_cast<int>(total);
    std::vector<Edge> edges;
    // Node index is mixed-radix over coordinates, axis 0 fastest.
    long long stride = 1;
    for (int d = 0; d < dims; ++d) {
        for (int i = 0; i < n; ++i) {
            const int coord = static_cast<int>((i / stride) % side);
            if (coord + 1 < side)
                edges.push_back({i, i + static_cast<int>(stride), 1.0});
        }
        stride *= side;
    }
    return Graph(n, std::move(edges));
}

Graph load_edge_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<Edge> edges;
    int max_node = -1;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        long long i = 0, j = 0;
        double w = 0.0;
        if (!(row >> i)) continue;  // blank or comment-only line
        if (!(row >> j >> w))
            throw ParseError(lineno, "expected \"<i> <j> <w>\"");
        std::string trailing;
        if (row >> trailing)
            throw ParseError(lineno, "unexpected trailing field \"" + trailing + "\"");
        if (i < 0 || j < 0)
            throw ParseError(lineno, "negative node index");
        if (i == j)
            throw SelfLoop("line " + std::to_string(lineno) + ": self-loop at node " +
                           std::to_string(i));
        if (!(w > 0.0))
            throw ParseError(lineno, "edge weight must be positive");
        edges.push_back({static_cast<int>(i), static_cast<int>(j), w});
        max_node = std::max(max_node, static_cast<int>(std::max(i, j)));
    }
    if (max_node < 0) throw ParseError(lineno, "edge list is empty");
    return Graph(max_node + 1, std::move(edges));
}

void save_edge_list(const Graph& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "# nodes: " << g.node_count() << "\n";
    char buf[96];
    for (const Edge& e : g.edges()) {
        std::snprintf(buf, sizeof buf, "%d %d %.17g\n", e.u, e.v, e.w);
        out << buf;
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace gfs
