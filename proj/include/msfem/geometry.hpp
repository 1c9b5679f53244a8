#pragma once

#include <cstdint>
#include <vector>

namespace msfem {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned rectangle, corners (xmin,ymin)-(xmax,ymax).
struct Rect {
    double xmin, ymin, xmax, ymax;

    bool contains_strict(double px, double py) const {
        return px > xmin && px < xmax && py > ymin && py < ymax;
    }
    double area() const { return (xmax - xmin) * (ymax - ymin); }
};

/// Perforation motif: disjoint rectangles in the closed unit cell [0,1]^2.
struct Motif {
    std::vector<Rect> rectangles;

    bool empty() const { return rectangles.empty(); }
    double area() const;

    static Motif none() { return {}; }
    // Square (0.25,0.75)^2, interior to the cell.
    static Motif o1();
    // (0,0.25)x(0.25,0.75) U (0.75,1)x(0.25,0.75); touches the cell faces,
    // so the scaled perforations straddle mesh edges.
    static Motif o2();
    // o1 shrunk by factor r about the cell center, r in (0,1].
    static Motif scaled_o1(double r);
};

enum class PatternKind { Periodic, RandomThinned };

struct PerforationPattern {
    PatternKind kind = PatternKind::Periodic;
    Motif motif;
    double keep_probability = 1.0;  // RandomThinned only
    std::uint64_t seed = 0;         // RandomThinned only

    static PerforationPattern periodic(Motif m) {
        return {PatternKind::Periodic, std::move(m), 1.0, 0};
    }
    static PerforationPattern random_thinned(Motif m, double keep, std::uint64_t seed) {
        return {PatternKind::RandomThinned, std::move(m), keep, seed};
    }

    /// Whether the perforation copy in integer cell (kx,ky) is retained.
    /// Counter-based: a pure function of (seed, kx, ky), so the answer does
    /// not depend on enumeration order.
    bool cell_retained(std::int64_t kx, std::int64_t ky) const;
};

enum class PerforationBC { Dirichlet, Neumann };

/// The perforated domain: Omega = (0,1)^2 minus the epsilon-periodic copies
/// of the motif (possibly randomly thinned).
struct DomainSpec {
    double epsilon = 1.0;
    PerforationPattern pattern;
    PerforationBC perforation_bc = PerforationBC::Dirichlet;
};

/// True iff p is in the fluid part of the domain. Points exactly on a
/// perforation boundary count as fluid.
bool fluid_indicator(Vec2 p, const DomainSpec& spec);

/// All retained perforation rectangles (scaled by epsilon) that intersect
/// `window`, clipped to (0,1)^2, ordered lexicographically by cell index.
std::vector<Rect> perforation_rectangles(const DomainSpec& spec, const Rect& window);

}  // namespace msfem
