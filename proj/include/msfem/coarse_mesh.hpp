#pragma once

#include <array>
#include <vector>

#include "msfem/geometry.hpp"

namespace msfem {

/// Uniform coarse triangulation of (0,1)^2: N x N squares, each split along
/// the (i,j)->(i+1,j+1) diagonal. 2N^2 triangles, (N+1)^2 vertices.
struct CoarseMesh {
    int N = 0;
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;  // vertex ids, ccw

    struct Edge {
        int v0, v1;  // v0 < v1
        bool interior;
        std::array<int, 2> tris{-1, -1};  // adjacent triangles (tris[1] = -1 on boundary)
    };
    std::vector<Edge> edges;
    std::vector<std::array<int, 3>> tri_edges;  // local edge k joins local vertices k,(k+1)%3

    double H() const { return 1.0 / N; }
    int interior_edge_count() const;
};

CoarseMesh build_coarse_mesh(int N);

}  // namespace msfem
