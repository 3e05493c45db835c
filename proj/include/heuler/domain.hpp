#pragma once

/// @file domain.hpp
/// @brief Sector domains {a < r < b, 0 < theta < theta0} and their log-polar grids.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "heuler/error.hpp"

namespace heuler {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Boundary pieces of the closed sector minus the origin.
enum class Edge { T, B, L, R };
enum class Vertex { TL, BL, TR, BR };

class SectorDomain {
public:
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double theta0() const noexcept { return theta0_; }

    bool has_edge(Edge e) const noexcept {
        switch (e) {
            case Edge::T:
            case Edge::B: return true;
            case Edge::L: return a_ > 0.0;
            case Edge::R: return std::isfinite(b_);
        }
        return false;
    }
    bool has_vertex(Vertex v) const noexcept {
        switch (v) {
            case Vertex::TL:
            case Vertex::BL: return a_ > 0.0;
            case Vertex::TR:
            case Vertex::BR: return std::isfinite(b_);
        }
        return false;
    }
    bool is_full_turn() const noexcept { return theta0_ == kTwoPi; }

    friend SectorDomain make_sector(double a, double b, double theta0);

private:
    SectorDomain(double a, double b, double theta0) : a_(a), b_(b), theta0_(theta0) {}
    double a_;
    double b_;
    double theta0_;
};

/// Validates 0 <= a < b <= inf and 0 < theta0 <= 2*pi. A full turn is kept as a
/// slit annulus: theta = 0 and theta = 2*pi stay distinct edges.
inline SectorDomain make_sector(double a, double b, double theta0) {
    if (std::isnan(a) || std::isnan(b) || a < 0.0 || !std::isfinite(a) || !(a < b)) {
        throw Error(ErrorKind::InvalidRadii, "need 0 <= a < b <= inf, got a=" + std::to_string(a) +
                                                 " b=" + std::to_string(b));
    }
    if (!(theta0 > 0.0) || theta0 > kTwoPi) {
        throw Error(ErrorKind::InvalidAngle, "need 0 < theta0 <= 2*pi, got " + std::to_string(theta0));
    }
    return SectorDomain(a, b, theta0);
}

/// Classification of a grid node. Truncation edges are the artificial
/// s = s_min / s_max cuts used when a = 0 or b = inf.
enum class NodeClass { Interior, T, B, L, R, TL, BL, TR, BR, TruncLow, TruncHigh };

/// Uniform grid in (s, theta) with s = ln r, nodes (i, j), i in [0, n_s], j in [0, n_theta].
class LogPolarGrid {
public:
    static constexpr int kMinCells = 8;

    const SectorDomain& domain() const noexcept { return dom_; }
    double s_min() const noexcept { return s_min_; }
    double s_max() const noexcept { return s_max_; }
    int n_s() const noexcept { return n_s_; }
    int n_theta() const noexcept { return n_theta_; }
    double theta0() const noexcept { return dom_.theta0(); }
    double h_s() const noexcept { return (s_max_ - s_min_) / n_s_; }
    double h_theta() const noexcept { return dom_.theta0() / n_theta_; }
    int nodes_s() const noexcept { return n_s_ + 1; }
    int nodes_theta() const noexcept { return n_theta_ + 1; }
    std::size_t size() const noexcept {
        return static_cast<std::size_t>(n_s_ + 1) * static_cast<std::size_t>(n_theta_ + 1);
    }
    std::size_t index(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_theta_ + 1) + static_cast<std::size_t>(j);
    }

    // Node coordinates are defined by these two formulas and nothing else.
    double s(int i) const noexcept { return std::lerp(s_min_, s_max_, static_cast<double>(i) / n_s_); }
    double theta(int j) const noexcept { return dom_.theta0() * (static_cast<double>(j) / n_theta_); }
    double r(int i) const noexcept { return std::exp(s(i)); }

    bool truncated_low() const noexcept { return dom_.a() == 0.0; }
    bool truncated_high() const noexcept { return !std::isfinite(dom_.b()); }

    NodeClass classify(int i, int j) const noexcept {
        const bool lo = i == 0, hi = i == n_s_, bot = j == 0, top = j == n_theta_;
        if (bot || top) {
            if (lo && !truncated_low()) return bot ? NodeClass::BL : NodeClass::TL;
            if (hi && !truncated_high()) return bot ? NodeClass::BR : NodeClass::TR;
            return bot ? NodeClass::B : NodeClass::T;
        }
        if (lo) return truncated_low() ? NodeClass::TruncLow : NodeClass::L;
        if (hi) return truncated_high() ? NodeClass::TruncHigh : NodeClass::R;
        return NodeClass::Interior;
    }

    /// Row index i with s(i) == ln(r) (within 1e-12), if any.
    std::optional<int> row_at_radius(double radius) const {
        if (!(radius > 0.0)) return std::nullopt;
        const double target = std::log(radius);
        const double pos = (target - s_min_) / h_s();
        const int i = static_cast<int>(std::lround(pos));
        if (i < 0 || i > n_s_) return std::nullopt;
        if (std::abs(s(i) - target) > 1e-12 * std::max(1.0, std::abs(target))) return std::nullopt;
        return i;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["a"] = dom_.a();
        j["b"] = std::isfinite(dom_.b()) ? nlohmann::json(dom_.b()) : nlohmann::json("inf");
        j["theta0"] = dom_.theta0();
        j["s_min"] = s_min_;
        j["s_max"] = s_max_;
        j["n_s"] = n_s_;
        j["n_theta"] = n_theta_;
        return j;
    }

    static LogPolarGrid from_json(const nlohmann::json& j);

    friend LogPolarGrid build_grid(const SectorDomain&, int, int, std::optional<std::pair<double, double>>);

private:
    LogPolarGrid(SectorDomain dom, double s_min, double s_max, int n_s, int n_theta)
        : dom_(dom), s_min_(s_min), s_max_(s_max), n_s_(n_s), n_theta_(n_theta) {}

    SectorDomain dom_;
    double s_min_;
    double s_max_;
    int n_s_;
    int n_theta_;
};

/// Default truncation half-width in s for unbounded sides.
inline constexpr double kDefaultClipWidth = 4.0;

/// Default clip: finite ends map to ln a / ln b, unbounded ends are cut
/// kDefaultClipWidth away from the finite edge (or from s = 0 if neither is finite).
inline std::pair<double, double> default_clip(const SectorDomain& dom) {
    const bool lo_fin = dom.a() > 0.0;
    const bool hi_fin = std::isfinite(dom.b());
    if (lo_fin && hi_fin) return {std::log(dom.a()), std::log(dom.b())};
    if (lo_fin) return {std::log(dom.a()), std::log(dom.a()) + kDefaultClipWidth};
    if (hi_fin) return {std::log(dom.b()) - kDefaultClipWidth, std::log(dom.b())};
    return {-kDefaultClipWidth, kDefaultClipWidth};
}

/// Builds the (s, theta) grid. For finite ends the clip must reproduce ln a / ln b;
/// for unbounded ends it supplies the truncation level.
inline LogPolarGrid build_grid(const SectorDomain& dom, int n_s, int n_theta,
                               std::optional<std::pair<double, double>> clip = std::nullopt) {
    if (n_s < LogPolarGrid::kMinCells || n_theta < LogPolarGrid::kMinCells) {
        throw Error(ErrorKind::InvalidGrid, "need n_s, n_theta >= 8, got " + std::to_string(n_s) + "x" +
                                                std::to_string(n_theta));
    }
    auto [lo, hi] = clip.value_or(default_clip(dom));
    auto mismatch = [](double x, double y) { return std::abs(x - y) > 1e-12 * std::max(1.0, std::abs(y)); };
    if (dom.a() > 0.0 && mismatch(lo, std::log(dom.a()))) {
        throw Error(ErrorKind::InvalidGrid, "clip low end must equal ln a for a > 0");
    }
    if (std::isfinite(dom.b()) && mismatch(hi, std::log(dom.b()))) {
        throw Error(ErrorKind::InvalidGrid, "clip high end must equal ln b for finite b");
    }
    if (dom.a() > 0.0) lo = std::log(dom.a());
    if (std::isfinite(dom.b())) hi = std::log(dom.b());
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw Error(ErrorKind::InvalidGrid, "clip must be a finite increasing pair");
    }
    if (dom.a() == 0.0 && std::isfinite(dom.b()) && !(lo < std::log(dom.b()))) {
        throw Error(ErrorKind::InvalidGrid, "truncation level must lie inside the domain");
    }
    return LogPolarGrid(dom, lo, hi, n_s, n_theta);
}

inline LogPolarGrid LogPolarGrid::from_json(const nlohmann::json& j) {
    try {
        const double b = j.at("b").is_string() ? kInf : j.at("b").get<double>();
        auto dom = make_sector(j.at("a").get<double>(), b, j.at("theta0").get<double>());
        return build_grid(dom, j.at("n_s").get<int>(), j.at("n_theta").get<int>(),
                          std::pair{j.at("s_min").get<double>(), j.at("s_max").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::IoError, std::string("bad grid metadata: ") + e.what());
    }
}

}  // namespace heuler
