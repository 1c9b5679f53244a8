#include "msfem/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace msfem {

double Motif::area() const {
    double a = 0.0;
    for (const Rect& r : rectangles) a += r.area();
    return a;
}

Motif Motif::o1() { return {{{0.25, 0.25, 0.75, 0.75}}}; }

Motif Motif::o2() {
    return {{{0.0, 0.25, 0.25, 0.75}, {0.75, 0.25, 1.0, 0.75}}};
}

Motif Motif::scaled_o1(double r) {
    const double h = 0.25 * r;
    return {{{0.5 - h, 0.5 - h, 0.5 + h, 0.5 + h}}};
}

namespace {

// splitmix64 finalizer; decorrelates the (seed, cell) counter.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

bool PerforationPattern::cell_retained(std::int64_t kx, std::int64_t ky) const {
    if (kind == PatternKind::Periodic) return true;
    if (keep_probability >= 1.0) return true;
    if (keep_probability <= 0.0) return false;
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ static_cast<std::uint64_t>(kx));
    h = mix64(h ^ static_cast<std::uint64_t>(ky));
    // 53-bit uniform in [0,1)
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return u < keep_probability;
}

bool fluid_indicator(Vec2 p, const DomainSpec& spec) {
    const Motif& motif = spec.pattern.motif;
    if (motif.empty()) return true;
    const double eps = spec.epsilon;
    const double sx = p.x / eps;
    const double sy = p.y / eps;
    // A motif rectangle lies in the closed unit cell, so only the cell
    // containing the point (and, for boundary points, its neighbors) can
    // cover it; strict interior tests make boundary points fluid, which
    // also makes the neighbor cells irrelevant.
    const auto kx = static_cast<std::int64_t>(std::floor(sx));
    const auto ky = static_cast<std::int64_t>(std::floor(sy));
    const double fx = sx - static_cast<double>(kx);
    const double fy = sy - static_cast<double>(ky);
    if (!spec.pattern.cell_retained(kx, ky)) return true;
    for (const Rect& r : motif.rectangles) {
        if (r.contains_strict(fx, fy)) return false;
    }
    return true;
}

std::vector<Rect> perforation_rectangles(const DomainSpec& spec, const Rect& window) {
    std::vector<Rect> out;
    const Motif& motif = spec.pattern.motif;
    if (motif.empty()) return out;
    const double eps = spec.epsilon;
    const auto k0x = static_cast<std::int64_t>(std::floor(window.xmin / eps)) - 1;
    const auto k1x = static_cast<std::int64_t>(std::floor(window.xmax / eps)) + 1;
    const auto k0y = static_cast<std::int64_t>(std::floor(window.ymin / eps)) - 1;
    const auto k1y = static_cast<std::int64_t>(std::floor(window.ymax / eps)) + 1;
    for (std::int64_t kx = k0x; kx <= k1x; ++kx) {
        for (std::int64_t ky = k0y; ky <= k1y; ++ky) {
            if (!spec.pattern.cell_retained(kx, ky)) continue;
            for (const Rect& r : motif.rectangles) {
                Rect s{eps * (static_cast<double>(kx) + r.xmin),
                       eps * (static_cast<double>(ky) + r.ymin),
                       eps * (static_cast<double>(kx) + r.xmax),
                       eps * (static_cast<double>(ky) + r.ymax)};
                // clip to Omega = (0,1)^2
                s.xmin = std::max(s.xmin, 0.0);
                s.ymin = std::max(s.ymin, 0.0);
                s.xmax = std::min(s.xmax, 1.0);
                s.ymax = std::min(s.ymax, 1.0);
                if (s.xmax <= s.xmin || s.ymax <= s.ymin) continue;
                // keep only if it intersects the window with positive area
                if (s.xmin >= window.xmax || s.xmax <= window.xmin ||
                    s.ymin >= window.ymax || s.ymax <= window.ymin)
                    continue;
                out.push_back(s);
            }
        }
    }
    return out;
}

}  // namespace msfem
