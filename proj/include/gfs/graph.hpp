#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

namespace gfs {

struct Edge {
    int u = 0;
    int v = 0;
    double w = 1.0;
};

// Undirected weighted graph with positive edge weights, no self-loops and no
// duplicate edges.  Edges are stored canonically with u < v, sorted.
class Graph {
public:
    Graph(int node_count, std::vector<Edge> edges);

    int node_count() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }
    bool connected() const { return connected_; }

private:
    int n_ = 0;
    std::vector<Edge> edges_;
    bool connected_ = false;
};

struct LaplacianView {
    Eigen::MatrixXd matrix;   // D - W
    Eigen::VectorXd degrees;  // weighted degrees, diag of D
};

LaplacianView build_laplacian(const Graph& g);

// n nodes uniform in the unit square; edges between pairs within `radius`,
// Gaussian kernel weights exp(-d^2 / (2 theta^2)) with theta = radius / 2.
// Retries placement until the graph is connected (GenerationFailed after 50
// reseeds).
Graph gen_sensor_graph(int n, double radius, std::uint64_t seed);

// Stochastic block model: `communities` near-equal contiguous blocks,
// intra-block edge probability p_in, inter-block p_out, unit weights.
// Requires 0 <= p_out < p_in <= 1.  Retries as above.
Graph gen_community_graph(int n, int communities, double p_in, double p_out,
                          std::uint64_t seed);

// Finite lattice with side^dims nodes (dims in {1,2,3}) and unit-weight
// edges between nearest neighbours along each axis.
Graph gen_cube_graph(int side, int dims);

// Whitespace-separated "<i> <j> <w>" rows, 0-based endpoints, '#' comments,
// blank lines ignored, LF or CRLF.
Graph load_edge_list(const std::filesystem::path& path);
void save_edge_list(const Graph& g, const std::filesystem::path& path);

}  // namespace gfs
