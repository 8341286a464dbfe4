#include "flowdiff/ukg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flowdiff/error.hpp"

namespace flowdiff::ukg {

namespace {

double cross(Point o, Point a, Point b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double norm(Point a, Point b) { return std::hypot(b.x - a.x, b.y - a.y); }

bool on_segment(Point p, Point a, Point b, double tol) {
    const double len = norm(a, b);
    if (len == 0.0) return norm(p, a) <= tol;
    if (std::abs(cross(a, b, p)) / len > tol) return false;
    const double t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / (len * len);
    return t >= -tol / len && t <= 1.0 + tol / len;
}

int sign(double v, double tol) { return v > tol ? 1 : (v < -tol ? -1 : 0); }

bool segments_intersect(Point a, Point b, Point c, Point d, double tol) {
    const int d1 = sign(cross(a, b, c), tol);
    const int d2 = sign(cross(a, b, d), tol);
    const int d3 = sign(cross(c, d, a), tol);
    const int d4 = sign(cross(c, d, b), tol);
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    if (d1 == 0 && on_segment(c, a, b, tol)) return true;
    if (d2 == 0 && on_segment(d, a, b, tol)) return true;
    if (d3 == 0 && on_segment(a, c, d, tol)) return true;
    if (d4 == 0 && on_segment(b, c, d, tol)) return true;
    return false;
}

void validate_ring(const Ring& ring, const std::string& id) {
    if (ring.size() < 3) fail("ukg", "region '" + id + "': ring has fewer than 3 vertices");
    for (const auto& p : ring) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            fail("ukg", "region '" + id + "': non-finite coordinate");
        }
    }
    if (std::abs(ring_signed_area(ring)) <= 0.0) {
        fail("ukg", "region '" + id + "': ring has zero area");
    }
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (ring[i] == ring[(i + 1) % n]) fail("ukg", "region '" + id + "': repeated vertex");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (segments_intersect(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n], 0.0)) {
                fail("ukg", "region '" + id + "': self-intersecting ring");
            }
        }
    }
}

template <typename F>
void for_each_edge(const RegionGeometry& g, F&& f) {
    auto ring_edges = [&](const Ring& r) {
        for (std::size_t i = 0; i < r.size(); ++i) f(r[i], r[(i + 1) % r.size()]);
    };
    for (const auto& poly : g.polygons) {
        ring_edges(poly.outer);
        for (const auto& h : poly.holes) ring_edges(h);
    }
}

bool ring_contains(const Ring& ring, Point p) {
    bool inside = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point a = ring[i];
        const Point b = ring[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

}  // namespace

Ring normalize_ring(Ring ring) {
    if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
    return ring;
}

double ring_signed_area(const Ring& ring) {
    double a = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point p = ring[i];
        const Point q = ring[(i + 1) % ring.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
}

void validate_geometry(const RegionGeometry& geometry) {
    if (geometry.polygons.empty()) fail("ukg", "region '" + geometry.id + "': no polygons");
    for (const auto& poly : geometry.polygons) {
        validate_ring(poly.outer, geometry.id);
        for (const auto& h : poly.holes) validate_ring(h, geometry.id);
    }
}

Point centroid(const RegionGeometry& geometry) {
    double area = 0.0, cx = 0.0, cy = 0.0;
    auto accumulate = [&](const Ring& r, double sgn) {
        const double ra = ring_signed_area(r);
        double rx = 0.0, ry = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const Point p = r[i];
            const Point q = r[(i + 1) % r.size()];
            const double c = p.x * q.y - q.x * p.y;
            rx += (p.x + q.x) * c;
            ry += (p.y + q.y) * c;
        }
        // rx / (6 * ra) is the ring centroid; weight by |area|.
        const double w = sgn * std::abs(ra);
        cx += w * rx / (6.0 * ra);
        cy += w * ry / (6.0 * ra);
        area += w;
    };
    for (const auto& poly : geometry.polygons) {
        accumulate(poly.outer, 1.0);
        for (const auto& h : poly.holes) accumulate(h, -1.0);
    }
    if (area == 0.0) fail("ukg", "region '" + geometry.id + "': zero total area");
    return {cx / area, cy / area};
}

double shared_boundary_length(const RegionGeometry& a, const RegionGeometry& b, double tolerance) {
    double total = 0.0;
    for_each_edge(a, [&](Point p1, Point p2) {
        const double len = norm(p1, p2);
        if (len == 0.0) return;
        const double ux = (p2.x - p1.x) / len;
        const double uy = (p2.y - p1.y) / len;
        for_each_edge(b, [&](Point q1, Point q2) {
            if (std::abs(cross(p1, p2, q1)) / len > tolerance) return;
            if (std::abs(cross(p1, p2, q2)) / len > tolerance) return;
            const double t1 = (q1.x - p1.x) * ux + (q1.y - p1.y) * uy;
            const double t2 = (q2.x - p1.x) * ux + (q2.y - p1.y) * uy;
            const double lo = std::max(0.0, std::min(t1, t2));
            const double hi = std::min(len, std::max(t1, t2));
            if (hi - lo > tolerance) total += hi - lo;
        });
    });
    return total;
}

PointLocation locate(const RegionGeometry& geometry, Point p, double tolerance) {
    bool boundary = false;
    for_each_edge(geometry, [&](Point a, Point b) {
        if (!boundary && on_segment(p, a, b, tolerance)) boundary = true;
    });
    if (boundary) return PointLocation::Boundary;
    for (const auto& poly : geometry.polygons) {
        if (!ring_contains(poly.outer, p)) continue;
        const bool in_hole = std::any_of(poly.holes.begin(), poly.holes.end(),
                                         [&](const Ring& h) { return ring_contains(h, p); });
        if (!in_hole) return PointLocation::Inside;
    }
    return PointLocation::Outside;
}

double haversine_km(Point a, Point b) {
    constexpr double deg = std::numbers::pi / 180.0;
    const double lat1 = a.y * deg;
    const double lat2 = b.y * deg;
    const double dlat = (b.y - a.y) * deg;
    const double dlon = (b.x - a.x) * deg;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

}  // namespace flowdiff::ukg
