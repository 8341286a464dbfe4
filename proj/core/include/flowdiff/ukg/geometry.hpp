#pragma once

#include <string>
#include <vector>

namespace flowdiff::ukg {

/// Planar coordinate; for geographic inputs x = longitude, y = latitude (degrees).
struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

/// Closed ring stored without the repeated closing vertex.
using Ring = std::vector<Point>;

struct Polygon {
    Ring outer;
    std::vector<Ring> holes;
};

struct RegionGeometry {
    std::string id;
    std::vector<Polygon> polygons;
};

enum class PointLocation { Outside, Inside, Boundary };

/// Drops a repeated closing vertex, if present.
Ring normalize_ring(Ring ring);

/// Throws flowdiff::Error naming `geometry.id` for empty, degenerate,
/// non-finite or self-intersecting rings.
void validate_geometry(const RegionGeometry& geometry);

double ring_signed_area(const Ring& ring);
/// Area-weighted centroid over all polygons (holes subtracted).
Point centroid(const RegionGeometry& geometry);

/// Total length of boundary segments shared by the two geometries (collinear
/// overlaps of positive length). Corner contacts contribute zero.
double shared_boundary_length(const RegionGeometry& a, const RegionGeometry& b,
                              double tolerance = 1e-9);

PointLocation locate(const RegionGeometry& geometry, Point p, double tolerance = 1e-12);

/// Great-circle distance between two lon/lat points (mean Earth radius).
double haversine_km(Point a, Point b);

inline constexpr double kEarthRadiusKm = 6371.0088;

}  // namespace flowdiff::ukg
