#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "poprec/core.hpp"

namespace poprec {

enum class GridKind { Arc, Disc };

/// Arc half-width convention: 2*pi/L or 1/L.
enum class ArcWidth { TwoPiOverL, OneOverL };

std::string to_string(GridKind kind);
GridKind grid_kind_from_string(const std::string& s);

struct GridPoint {
    Complex z;
    GridKind kind = GridKind::Arc;
    int index = 0;

    bool operator==(const GridPoint&) const = default;
};

struct GridSpec {
    GridKind kind = GridKind::Arc;
    int L = 1;
    ArcWidth width_mode = ArcWidth::OneOverL;
    double spacing = 0.0;
    int max_points = 257;
    int m = 1;  // disc mode: |z - (1 - p/m)| <= p/m

    /// Arc half-width, capped at pi.
    double arc_half_width() const;
    void validate() const;
};

/// max(1, floor((n / (ln n * p^2))^{1/3})).
int default_L(int n, double p);

/// Arc spec with `count` points spread evenly over the half-width. When the
/// half-width reaches pi the points are equispaced on the full circle.
GridSpec equispaced_arc(int L, ArcWidth mode, int count);

/// e^{i j spacing} for |j spacing| <= half-width, at most max_points of them
/// taken symmetrically around z = 1; ordered by j.
std::vector<GridPoint> build_arc_grid(const GridSpec& spec);

/// Lattice points (j s, j' s) in the closed disc around 1 - p/m of radius
/// p/m, nearest the center first, capped at max_points.
std::vector<GridPoint> build_disc_grid(const GridSpec& spec, double p);

nlohmann::json grid_to_json(const GridSpec& spec, const std::vector<GridPoint>& points);

}  // namespace poprec
