#pragma once

/// @file fields.hpp
/// @brief Node-sampled fields on log-polar grids, polar differential operators
/// written in (s, theta), stream-function construction, the Euler residual and
/// the working-frame transforms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "heuler/domain.hpp"
#include "heuler/error.hpp"
#include "heuler/exact_solutions.hpp"
#include "heuler/finite_difference.hpp"
#include "heuler/io.hpp"

namespace heuler {

inline constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

/// Scalar samples indexed by grid.index(i, j). Boundary values that an
/// operator cannot produce are stored as NaN ("absent").
struct ScalarField {
    LogPolarGrid grid;
    std::vector<double> vals;

    explicit ScalarField(LogPolarGrid g) : grid(std::move(g)), vals(grid.size(), 0.0) {}
    ScalarField(LogPolarGrid g, std::vector<double> v) : grid(std::move(g)), vals(std::move(v)) {
        if (vals.size() != grid.size()) throw Error(ErrorKind::InvalidGrid, "field size does not match grid");
    }

    double& at(int i, int j) { return vals[grid.index(i, j)]; }
    double at(int i, int j) const { return vals[grid.index(i, j)]; }
};

struct VectorField {
    LogPolarGrid grid;
    std::vector<double> ur;
    std::vector<double> utheta;

    explicit VectorField(LogPolarGrid g) : grid(std::move(g)), ur(grid.size(), 0.0), utheta(grid.size(), 0.0) {}
    VectorField(LogPolarGrid g, std::vector<double> r, std::vector<double> t)
        : grid(std::move(g)), ur(std::move(r)), utheta(std::move(t)) {
        if (ur.size() != grid.size() || utheta.size() != grid.size()) {
            throw Error(ErrorKind::InvalidGrid, "vector field size does not match grid");
        }
    }
};

inline bool same_grid(const LogPolarGrid& a, const LogPolarGrid& b) {
    return a.n_s() == b.n_s() && a.n_theta() == b.n_theta() && a.s_min() == b.s_min() && a.s_max() == b.s_max() &&
           a.theta0() == b.theta0();
}

inline void require_same_grid(const LogPolarGrid& a, const LogPolarGrid& b) {
    if (!same_grid(a, b)) throw Error(ErrorKind::InvalidGrid, "fields live on different grids");
}

// ---------------------------------------------------------------------------
// Sampling

/// fn(s, theta) at every node.
inline ScalarField sample(const LogPolarGrid& grid, const std::function<double(double, double)>& fn) {
    ScalarField out(grid);
    for (int i = 0; i < grid.nodes_s(); ++i) {
        for (int j = 0; j < grid.nodes_theta(); ++j) out.at(i, j) = fn(grid.s(i), grid.theta(j));
    }
    return out;
}

inline VectorField sample_velocity(const LogPolarGrid& grid, const HomogeneousSolution& sol) {
    VectorField out(grid);
    for (int i = 0; i < grid.nodes_s(); ++i) {
        for (int j = 0; j < grid.nodes_theta(); ++j) {
            const auto q = sol.eval(grid.r(i), grid.theta(j));
            out.ur[grid.index(i, j)] = q.u_r;
            out.utheta[grid.index(i, j)] = q.u_theta;
        }
    }
    return out;
}

inline ScalarField sample_pressure(const LogPolarGrid& grid, const HomogeneousSolution& sol) {
    return sample(grid, [&](double s, double th) { return sol.eval(std::exp(s), th).P; });
}

inline ScalarField sample_stream(const LogPolarGrid& grid, const HomogeneousSolution& sol) {
    return sample(grid, [&](double s, double th) { return sol.stream(std::exp(s), th); });
}

inline ScalarField sample_stream_laplacian(const LogPolarGrid& grid, const HomogeneousSolution& sol) {
    return sample(grid, [&](double s, double th) { return sol.stream_laplacian(std::exp(s), th); });
}

// ---------------------------------------------------------------------------
// Line derivatives

/// Derivative along s (deriv = 1, 2) at every node.
inline std::vector<double> d_s(const LogPolarGrid& grid, const std::vector<double>& vals, int deriv, int accuracy = 2) {
    fd::LineStencil st(grid.nodes_s(), grid.h_s(), deriv, accuracy);
    std::vector<double> out(vals.size());
    for (int j = 0; j < grid.nodes_theta(); ++j) {
        for (int i = 0; i < grid.nodes_s(); ++i) {
            out[grid.index(i, j)] = st.apply(i, [&](int m) { return vals[grid.index(m, j)]; });
        }
    }
    return out;
}

/// Derivative along theta (deriv = 1, 2) at every node.
inline std::vector<double> d_theta(const LogPolarGrid& grid, const std::vector<double>& vals, int deriv,
                                   int accuracy = 2) {
    fd::LineStencil st(grid.nodes_theta(), grid.h_theta(), deriv, accuracy);
    std::vector<double> out(vals.size());
    for (int i = 0; i < grid.nodes_s(); ++i) {
        for (int j = 0; j < grid.nodes_theta(); ++j) {
            out[grid.index(i, j)] = st.apply(j, [&](int m) { return vals[grid.index(i, m)]; });
        }
    }
    return out;
}

inline bool is_interior(const LogPolarGrid& g, int i, int j) {
    return i > 0 && i < g.n_s() && j > 0 && j < g.n_theta();
}

// ---------------------------------------------------------------------------
// Operators

/// u_theta = d_r psi = e^-s d_s psi, u_r = -(1/r) d_theta psi = -e^-s d_theta psi.
inline VectorField velocity_from_stream(const ScalarField& psi, int accuracy = 2) {
    const auto& g = psi.grid;
    auto ps = d_s(g, psi.vals, 1, accuracy);
    auto pt = d_theta(g, psi.vals, 1, accuracy);
    VectorField out(g);
    for (int i = 0; i < g.nodes_s(); ++i) {
        const double inv_r = std::exp(-g.s(i));
        for (int j = 0; j < g.nodes_theta(); ++j) {
            const auto k = g.index(i, j);
            out.utheta[k] = inv_r * ps[k];
            out.ur[k] = -inv_r * pt[k];
        }
    }
    return out;
}

/// r * div u = d_r(r u_r) + d_theta u_theta, written as e^-s d_s(e^s u_r) + d_theta u_theta.
inline std::vector<double> polar_divergence(const VectorField& u, int accuracy = 2) {
    const auto& g = u.grid;
    std::vector<double> rur(u.ur.size());
    for (int i = 0; i < g.nodes_s(); ++i) {
        const double r = g.r(i);
        for (int j = 0; j < g.nodes_theta(); ++j) rur[g.index(i, j)] = r * u.ur[g.index(i, j)];
    }
    auto a = d_s(g, rur, 1, accuracy);
    auto b = d_theta(g, u.utheta, 1, accuracy);
    std::vector<double> out(rur.size());
    for (int i = 0; i < g.nodes_s(); ++i) {
        const double inv_r = std::exp(-g.s(i));
        for (int j = 0; j < g.nodes_theta(); ++j) {
            const auto k = g.index(i, j);
            out[k] = inv_r * a[k] + b[k];
        }
    }
    return out;
}

struct StreamResult {
    ScalarField psi;
    double path_defect = 0.0;  ///< max |psi_rays_first - psi_arcs_first|
    double max_divergence = 0.0;
};

/// Recovers psi by trapezoid integration: along theta = 0 with d_s psi = e^s u_theta,
/// then along each ray with d_theta psi = -e^s u_r. psi(s_min, 0) = 0. The other
/// path order is integrated too and the largest mismatch is reported.
/// The polar divergence, relative to max(1, max |r u|), must stay below div_tol.
inline StreamResult stream_from_velocity(const VectorField& u, double div_tol = 1e-6) {
    const auto& g = u.grid;
    const auto div = polar_divergence(u);
    double scale = 1.0;
    for (int i = 0; i < g.nodes_s(); ++i) {
        const double r = g.r(i);
        for (int j = 0; j < g.nodes_theta(); ++j) {
            const auto k = g.index(i, j);
            scale = std::max({scale, r * std::abs(u.ur[k]), r * std::abs(u.utheta[k])});
        }
    }
    double worst = 0.0;
    int wi = 0, wj = 0;
    for (int i = 0; i < g.nodes_s(); ++i) {
        for (int j = 0; j < g.nodes_theta(); ++j) {
            const double d = std::abs(div[g.index(i, j)]) / scale;
            if (!(d <= worst)) {
                worst = d;
                wi = i;
                wj = j;
            }
        }
    }
    if (!(worst <= div_tol)) {
        throw NodeError(ErrorKind::NotDivergenceFree,
                        "polar divergence " + io::format_double(worst) + " at node (" + std::to_string(wi) + "," +
                            std::to_string(wj) + ")",
                        wi, wj);
    }

    const double hs = g.h_s(), ht = g.h_theta();
    auto ds_term = [&](int i, int j) { return g.r(i) * u.utheta[g.index(i, j)]; };
    auto dt_term = [&](int i, int j) { return -g.r(i) * u.ur[g.index(i, j)]; };

    ScalarField a(g), b(g);
    for (int i = 1; i < g.nodes_s(); ++i) a.at(i, 0) = a.at(i - 1, 0) + 0.5 * hs * (ds_term(i - 1, 0) + ds_term(i, 0));
    for (int i = 0; i < g.nodes_s(); ++i) {
        for (int j = 1; j < g.nodes_theta(); ++j) {
            a.at(i, j) = a.at(i, j - 1) + 0.5 * ht * (dt_term(i, j - 1) + dt_term(i, j));
        }
    }
    for (int j = 1; j < g.nodes_theta(); ++j) b.at(0, j) = b.at(0, j - 1) + 0.5 * ht * (dt_term(0, j - 1) + dt_term(0, j));
    for (int j = 0; j < g.nodes_theta(); ++j) {
        for (int i = 1; i < g.nodes_s(); ++i) {
            b.at(i, j) = b.at(i - 1, j) + 0.5 * hs * (ds_term(i - 1, j) + ds_term(i, j));
        }
    }
    double defect = 0.0;
    for (std::size_t k = 0; k < a.vals.size(); ++k) defect = std::max(defect, std::abs(a.vals[k] - b.vals[k]));
    return {std::move(a), defect, worst};
}

/// Delta psi = e^-2s (d_ss + d_thth) psi with the 5-point stencil at interior
/// nodes; boundary nodes are absent (NaN).
inline ScalarField laplacian_polar(const ScalarField& psi) {
    const auto& g = psi.grid;
    if (g.nodes_s() < 5 || g.nodes_theta() < 5) throw Error(ErrorKind::InvalidGrid, "Laplacian needs 5 nodes per direction");
    ScalarField out(g, std::vector<double>(g.size(), kAbsent));
    const double is2 = 1.0 / (g.h_s() * g.h_s()), it2 = 1.0 / (g.h_theta() * g.h_theta());
    for (int i = 1; i < g.n_s(); ++i) {
        const double w = std::exp(-2.0 * g.s(i));
        for (int j = 1; j < g.n_theta(); ++j) {
            const double c = psi.at(i, j);
            const double lss = (psi.at(i + 1, j) - 2.0 * c + psi.at(i - 1, j)) * is2;
            const double ltt = (psi.at(i, j + 1) - 2.0 * c + psi.at(i, j - 1)) * it2;
            out.at(i, j) = w * (lss + ltt);
        }
    }
    return out;
}

struct EulerResidual {
    ScalarField mom_r;
    ScalarField mom_theta;
    ScalarField div;
    double max_mom_r = 0.0;
    double max_mom_theta = 0.0;
    double max_div = 0.0;
    double momentum_scale = 0.0;    ///< largest single momentum term over interior nodes
    double divergence_scale = 0.0;  ///< largest velocity-gradient entry over interior nodes

    double relative_momentum() const {
        return momentum_scale > 0.0 ? std::max(max_mom_r, max_mom_theta) / momentum_scale
                                    : std::max(max_mom_r, max_mom_theta);
    }
    double relative_divergence() const { return divergence_scale > 0.0 ? max_div / divergence_scale : max_div; }
    double relative() const { return std::max(relative_momentum(), relative_divergence()); }
};

/// Polar momentum and continuity residuals at interior nodes,
///   u_r d_r u_r + (u_theta/r) d_theta u_r - u_theta^2/r + d_r P,
///   u_r d_r u_theta + (u_theta/r) d_theta u_theta + u_r u_theta / r + (1/r) d_theta P,
///   div u,
/// with d_r = e^-s d_s. `accuracy` selects the difference order (2 = central differences).
inline EulerResidual euler_residual(const VectorField& u, const ScalarField& P, int accuracy = 2) {
    require_same_grid(u.grid, P.grid);
    const auto& g = u.grid;
    const auto ur_s = d_s(g, u.ur, 1, accuracy), ur_t = d_theta(g, u.ur, 1, accuracy);
    const auto ut_s = d_s(g, u.utheta, 1, accuracy), ut_t = d_theta(g, u.utheta, 1, accuracy);
    const auto P_s = d_s(g, P.vals, 1, accuracy), P_t = d_theta(g, P.vals, 1, accuracy);
    std::vector<double> rur(u.ur.size());
    for (int i = 0; i < g.nodes_s(); ++i) {
        for (int j = 0; j < g.nodes_theta(); ++j) rur[g.index(i, j)] = g.r(i) * u.ur[g.index(i, j)];
    }
    const auto rur_s = d_s(g, rur, 1, accuracy);

    EulerResidual out{ScalarField(g, std::vector<double>(g.size(), kAbsent)),
                      ScalarField(g, std::vector<double>(g.size(), kAbsent)),
                      ScalarField(g, std::vector<double>(g.size(), kAbsent))};
    for (int i = 1; i < g.n_s(); ++i) {
        const double ir = std::exp(-g.s(i));
        for (int j = 1; j < g.n_theta(); ++j) {
            const auto k = g.index(i, j);
            const double a = u.ur[k], b = u.utheta[k];
            const double r1 = a * ir * ur_s[k], r2 = b * ir * ur_t[k], r3 = -b * b * ir, r4 = ir * P_s[k];
            const double t1 = a * ir * ut_s[k], t2 = b * ir * ut_t[k], t3 = a * b * ir, t4 = ir * P_t[k];
            const double d1 = ir * ir * rur_s[k], d2 = ir * ut_t[k];
            out.mom_r.vals[k] = r1 + r2 + r3 + r4;
            out.mom_theta.vals[k] = t1 + t2 + t3 + t4;
            out.div.vals[k] = d1 + d2;
            out.max_mom_r = std::max(out.max_mom_r, std::abs(out.mom_r.vals[k]));
            out.max_mom_theta = std::max(out.max_mom_theta, std::abs(out.mom_theta.vals[k]));
            out.max_div = std::max(out.max_div, std::abs(out.div.vals[k]));
            out.momentum_scale = std::max({out.momentum_scale, std::abs(r1), std::abs(r2), std::abs(r3),
                                           std::abs(r4), std::abs(t1), std::abs(t2), std::abs(t3), std::abs(t4)});
            out.divergence_scale = std::max({out.divergence_scale, std::abs(d1), std::abs(d2), ir * std::abs(ur_s[k]),
                                             ir * std::abs(ur_t[k]), ir * std::abs(ut_s[k]), ir * std::abs(ut_t[k]),
                                             ir * std::abs(a), ir * std::abs(b)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Working frames

/// Psi = psi - c s.
struct Alpha1Frame {
    double c = 0.0;
};
/// Psi = psi e^{s (alpha - 1)}.
struct GeneralFrame {
    double alpha = 2.0;
};
/// Psi = psi.
struct RawFrame {};

using FrameTag = std::variant<Alpha1Frame, GeneralFrame, RawFrame>;

inline std::string frame_name(const FrameTag& tag) {
    return std::visit(
        [](const auto& t) -> std::string {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, Alpha1Frame>) return "Alpha1Frame(c=" + io::format_double(t.c) + ")";
            else if constexpr (std::is_same_v<T, GeneralFrame>)
                return "GeneralFrame(alpha=" + io::format_double(t.alpha) + ")";
            else return "RawFrame";
        },
        tag);
}

namespace detail {

inline void check_frame(const FrameTag& tag) {
    std::visit(
        [](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, Alpha1Frame>) {
                if (!std::isfinite(t.c)) throw Error(ErrorKind::ParameterDomain, "frame constant c must be finite");
            } else if constexpr (std::is_same_v<T, GeneralFrame>) {
                if (!std::isfinite(t.alpha)) throw Error(ErrorKind::ParameterDomain, "frame alpha must be finite");
            }
        },
        tag);
}

inline double frame_forward(const FrameTag& tag, double s, double psi) {
    return std::visit(
        [&](const auto& t) -> double {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, Alpha1Frame>) return psi - t.c * s;
            else if constexpr (std::is_same_v<T, GeneralFrame>) return psi * std::exp(s * (t.alpha - 1.0));
            else return psi;
        },
        tag);
}

inline double frame_inverse(const FrameTag& tag, double s, double Psi) {
    return std::visit(
        [&](const auto& t) -> double {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, Alpha1Frame>) return Psi + t.c * s;
            else if constexpr (std::is_same_v<T, GeneralFrame>) return Psi * std::exp(s * (1.0 - t.alpha));
            else return Psi;
        },
        tag);
}

}  // namespace detail

inline ScalarField to_working_frame(const ScalarField& psi, const FrameTag& tag) {
    detail::check_frame(tag);
    ScalarField out(psi.grid);
    for (int i = 0; i < psi.grid.nodes_s(); ++i) {
        const double s = psi.grid.s(i);
        for (int j = 0; j < psi.grid.nodes_theta(); ++j) out.at(i, j) = detail::frame_forward(tag, s, psi.at(i, j));
    }
    return out;
}

inline ScalarField from_working_frame(const ScalarField& Psi, const FrameTag& tag) {
    detail::check_frame(tag);
    ScalarField out(Psi.grid);
    for (int i = 0; i < Psi.grid.nodes_s(); ++i) {
        const double s = Psi.grid.s(i);
        for (int j = 0; j < Psi.grid.nodes_theta(); ++j) out.at(i, j) = detail::frame_inverse(tag, s, Psi.at(i, j));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Export / import

inline constexpr int kBinaryDumpThreshold = 512;

inline void write_field_csv(const std::filesystem::path& path, const ScalarField& f) {
    auto out = io::open_for_write(path);
    out << "# grid=" << f.grid.to_json().dump() << "\n";
    out << "s,theta,value\n";
    const auto& g = f.grid;
    for (int i = 0; i < g.nodes_s(); ++i) {
        for (int j = 0; j < g.nodes_theta(); ++j) {
            out << io::format_double(g.s(i)) << ',' << io::format_double(g.theta(j)) << ','
                << io::format_double(f.at(i, j)) << '\n';
        }
    }
}

inline void write_velocity_csv(const std::filesystem::path& path, const VectorField& u) {
    auto out = io::open_for_write(path);
    out << "# grid=" << u.grid.to_json().dump() << "\n";
    out << "s,theta,ur,utheta\n";
    const auto& g = u.grid;
    for (int i = 0; i < g.nodes_s(); ++i) {
        for (int j = 0; j < g.nodes_theta(); ++j) {
            const auto k = g.index(i, j);
            out << io::format_double(g.s(i)) << ',' << io::format_double(g.theta(j)) << ','
                << io::format_double(u.ur[k]) << ',' << io::format_double(u.utheta[k]) << '\n';
        }
    }
}

namespace detail {

/// Reads a CSV written by the writers above and returns the grid plus columns 2.. per row.
inline std::pair<LogPolarGrid, std::vector<std::vector<double>>> read_grid_csv(const std::filesystem::path& path,
                                                                               std::size_t value_columns) {
    auto in = io::open_for_read(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# grid=", 0) != 0) {
        throw Error(ErrorKind::IoError, path.string() + ": missing '# grid=' metadata row");
    }
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(line.substr(7));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::IoError, path.string() + ": " + e.what());
    }
    auto grid = LogPolarGrid::from_json(meta);
    std::getline(in, line);
    std::vector<std::vector<double>> cols(value_columns, std::vector<double>(grid.size()));
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (row >= grid.size()) throw Error(ErrorKind::IoError, path.string() + ": too many rows");
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(io::parse_double(cell));
        if (cells.size() != 2 + value_columns) {
            throw Error(ErrorKind::IoError, path.string() + ": row " + std::to_string(row + 3) + " has " +
                                                std::to_string(cells.size()) + " columns");
        }
        for (std::size_t c = 0; c < value_columns; ++c) cols[c][row] = cells[2 + c];
        ++row;
    }
    if (row != grid.size()) throw Error(ErrorKind::IoError, path.string() + ": too few rows");
    return {std::move(grid), std::move(cols)};
}

}  // namespace detail

inline ScalarField read_field_csv(const std::filesystem::path& path) {
    auto [grid, cols] = detail::read_grid_csv(path, 1);
    return ScalarField(std::move(grid), std::move(cols[0]));
}

inline VectorField read_velocity_csv(const std::filesystem::path& path) {
    auto [grid, cols] = detail::read_grid_csv(path, 2);
    return VectorField(std::move(grid), std::move(cols[0]), std::move(cols[1]));
}

/// Row-major float64 dump (little-endian host order) plus `<path>.json` with the grid.
inline void write_field_binary(const std::filesystem::path& path, const ScalarField& f) {
    {
        auto out = io::open_for_write(path, true);
        out.write(reinterpret_cast<const char*>(f.vals.data()),
                  static_cast<std::streamsize>(f.vals.size() * sizeof(double)));
    }
    auto side = io::open_for_write(std::filesystem::path(path.string() + ".json"));
    nlohmann::json j;
    j["grid"] = f.grid.to_json();
    j["layout"] = "row-major (i over s, j over theta), float64";
    side << j.dump(2) << '\n';
}

inline ScalarField read_field_binary(const std::filesystem::path& path) {
    auto side = io::open_for_read(std::filesystem::path(path.string() + ".json"));
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(side);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::IoError, e.what());
    }
    auto grid = LogPolarGrid::from_json(j.at("grid"));
    std::vector<double> vals(grid.size());
    auto in = io::open_for_read(path, true);
    in.read(reinterpret_cast<char*>(vals.data()), static_cast<std::streamsize>(vals.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(vals.size() * sizeof(double))) {
        throw Error(ErrorKind::IoError, path.string() + ": truncated binary dump");
    }
    return ScalarField(std::move(grid), std::move(vals));
}

/// CSV below 512 x 512 cells, binary dump with JSON sidecar at or above.
/// Returns the path actually written.
inline std::filesystem::path write_field(const std::filesystem::path& stem, const ScalarField& f) {
    if (f.grid.n_s() >= kBinaryDumpThreshold && f.grid.n_theta() >= kBinaryDumpThreshold) {
        auto p = stem;
        p += ".bin";
        write_field_binary(p, f);
        return p;
    }
    auto p = stem;
    p += ".csv";
    write_field_csv(p, f);
    return p;
}

}  // namespace heuler
