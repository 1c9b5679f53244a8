#include "msfem/coarse_mesh.hpp"

#include <cassert>
#include <map>

namespace msfem {

int CoarseMesh::interior_edge_count() const {
    int n = 0;
    for (const Edge& e : edges)
        if (e.interior) ++n;
    return n;
}

CoarseMesh build_coarse_mesh(int N) {
    assert(N >= 1);
    CoarseMesh m;
    m.N = N;
    const int np = N + 1;
    m.vertices.reserve(np * np);
    for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i)
            m.vertices.push_back({static_cast<double>(i) / N, static_cast<double>(j) / N});

    auto vid = [np](int i, int j) { return j * np + i; };

    m.triangles.reserve(2 * N * N);
    for (int j = 0; j < N; ++j) {
        for (int i = 0; i < N; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j);
            const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            m.triangles.push_back({v00, v10, v11});  // lower
            m.triangles.push_back({v00, v11, v01});  // upper
        }
    }

    std::map<std::pair<int, int>, int> edge_id;
    m.tri_edges.resize(m.triangles.size());
    for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
        for (int k = 0; k < 3; ++k) {
            int a = m.triangles[t][k];
            int b = m.triangles[t][(k + 1) % 3];
            if (a > b) std::swap(a, b);
            auto [it, inserted] = edge_id.try_emplace({a, b}, static_cast<int>(m.edges.size()));
            if (inserted) m.edges.push_back({a, b, false, {t, -1}});
            else {
                m.edges[it->second].tris[1] = t;
                m.edges[it->second].interior = true;
            }
            m.tri_edges[t][k] = it->second;
        }
    }
    // Edges used by a single triangle lie on the boundary of (0,1)^2.
    return m;
}

}  // namespace msfem
