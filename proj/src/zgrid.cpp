#include "poprec/zgrid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

namespace poprec {

std::string to_string(GridKind kind) { return kind == GridKind::Arc ? "arc" : "disc"; }

GridKind grid_kind_from_string(const std::string& s) {
    if (s == "arc") return GridKind::Arc;
    if (s == "disc") return GridKind::Disc;
    throw ParameterError("unknown grid kind '" + s + "'");
}

double GridSpec::arc_half_width() const {
    const double w = width_mode == ArcWidth::TwoPiOverL ? 2.0 * std::numbers::pi / L : 1.0 / L;
    return std::min(w, std::numbers::pi);
}

void GridSpec::validate() const {
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw ParameterError("grid spacing must be positive");
    if (max_points < 1) throw ParameterError("grid max_points must be at least 1");
    if (kind == GridKind::Arc && L < 1) throw ParameterError("arc grid needs L >= 1");
    if (kind == GridKind::Disc && m < 1) throw ParameterError("disc grid needs m >= 1");
}

int default_L(int n, double p) {
    if (n < 2) throw ParameterError("default_L needs n >= 2");
    if (!(p > 0.0 && p <= 1.0)) throw ParameterError("default_L: p must lie in (0,1]");
    const double v = std::cbrt(n / (std::log(double(n)) * p * p));
    return std::max(1, static_cast<int>(std::floor(v + 1e-12)));
}

GridSpec equispaced_arc(int L, ArcWidth mode, int count) {
    if (count < 1) throw ParameterError("grid point count must be positive");
    GridSpec spec;
    spec.kind = GridKind::Arc;
    spec.L = L;
    spec.width_mode = mode;
    spec.max_points = count;
    const double width = spec.arc_half_width();
    if (width >= std::numbers::pi) {
        spec.spacing = 2.0 * std::numbers::pi / count;
    } else {
        const int half = std::max(1, (count - 1) / 2);
        spec.spacing = width / half;
    }
    return spec;
}

std::vector<GridPoint> build_arc_grid(const GridSpec& spec) {
    if (spec.kind != GridKind::Arc) throw ParameterError("build_arc_grid: spec is not an arc grid");
    spec.validate();
    const double width = spec.arc_half_width();
    if (width < std::numbers::pi && spec.spacing > width * (1.0 + 1e-12)) throw ParameterError("arc spacing exceeds the half-width");
    const long j_max = static_cast<long>(std::floor(width / spec.spacing * (1.0 + 1e-12)));
    const long j_cap = std::min<long>(j_max, (spec.max_points - 1) / 2);
    std::vector<GridPoint> out;
    for (long j = -j_cap; j <= j_cap; ++j) {
        const double theta = static_cast<double>(j) * spec.spacing;
        // Keep theta in (-pi, pi] so +-pi is not listed twice.
        if (theta <= -std::numbers::pi * (1.0 - 1e-12)) continue;
        out.push_back({std::polar(1.0, theta), GridKind::Arc, static_cast<int>(out.size())});
    }
    return out;
}

std::vector<GridPoint> build_disc_grid(const GridSpec& spec, double p) {
    if (spec.kind != GridKind::Disc) throw ParameterError("build_disc_grid: spec is not a disc grid");
    spec.validate();
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("build_disc_grid: p must lie in (0,1)");
    const double r = p / spec.m;
    const double c = 1.0 - r;
    const double s = spec.spacing;
    const long re_lo = static_cast<long>(std::ceil((c - r) / s - 1e-9));
    const long re_hi = static_cast<long>(std::floor((c + r) / s + 1e-9));
    const long im_hi = static_cast<long>(std::floor(r / s + 1e-9));
    std::vector<Complex> pts;
    for (long a = re_lo; a <= re_hi; ++a) {
        for (long b = -im_hi; b <= im_hi; ++b) {
            const Complex z(a * s, b * s);
            if (std::abs(z - c) <= r + 1e-14) pts.push_back(z);
        }
    }
    if (pts.empty()) throw ParameterError("disc grid is empty for this spacing");
    std::stable_sort(pts.begin(), pts.end(), [c](Complex u, Complex v) {
        const double du = std::abs(u - c), dv = std::abs(v - c);
        if (du != dv) return du < dv;
        if (u.real() != v.real()) return u.real() < v.real();
        return u.imag() < v.imag();
    });
    if (pts.size() > static_cast<std::size_t>(spec.max_points)) pts.resize(spec.max_points);
    std::vector<GridPoint> out;
    out.reserve(pts.size());
    for (const auto& z : pts) out.push_back({z, GridKind::Disc, static_cast<int>(out.size())});
    return out;
}

nlohmann::json grid_to_json(const GridSpec& spec, const std::vector<GridPoint>& points) {
    nlohmann::json j;
    j["kind"] = to_string(spec.kind);
    j["L"] = spec.L;
    j["spacing"] = spec.spacing;
    auto& arr = j["points"] = nlohmann::json::array();
    for (const auto& g : points) arr.push_back({g.z.real(), g.z.imag()});
    return j;
}

}  // namespace poprec
