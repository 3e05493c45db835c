#pragma once

/// @file rigidity.hpp
/// @brief A posteriori checks on field data: homogeneity, recovery of g in
/// Delta psi = g(psi), the scaling relations g must satisfy, the Jacobian
/// identity, level-set graph structure, sliding positivity and the boundary
/// hypothesis constants.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "heuler/domain.hpp"
#include "heuler/elliptic_solver.hpp"
#include "heuler/error.hpp"
#include "heuler/fields.hpp"
#include "heuler/finite_difference.hpp"
#include "heuler/io.hpp"

namespace heuler {

namespace detail {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    LineFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double e = y[k] - (f.intercept + f.slope * x[k]);
        sse += e * e;
    }
    f.r_squared = syy > 0.0 ? 1.0 - sse / syy : (sse == 0.0 ? 1.0 : 0.0);
    return f;
}

/// Least-squares quadratic about the mean of x; returns the coefficients
/// (value at the mean, slope, curvature) and the max absolute residual.
struct QuadFit {
    double x0 = 0.0;
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double max_residual = 0.0;
};

inline QuadFit local_quadratic(const std::vector<double>& x, const std::vector<double>& y) {
    QuadFit q;
    const double n = static_cast<double>(x.size());
    q.x0 = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double w = 0.0;
    for (double v : x) w = std::max(w, std::abs(v - q.x0));
    double m[3][4] = {};
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double t = w > 0.0 ? (x[k] - q.x0) / w : 0.0;
        const double b[3] = {1.0, t, t * t};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m[r][c] += b[r] * b[c];
            m[r][3] += b[r] * y[k];
        }
    }
    // Fewer than three distinct abscissae: drop to a line or a constant.
    int dim = w > 0.0 ? 3 : 1;
    double coef[3] = {};
    for (; dim >= 1; --dim) {
        double a[3][4];
        for (int r = 0; r < dim; ++r) {
            for (int c = 0; c < dim; ++c) a[r][c] = m[r][c];
            a[r][3] = m[r][3];
        }
        bool ok = true;
        for (int p = 0; p < dim && ok; ++p) {
            int piv = p;
            for (int r = p + 1; r < dim; ++r) {
                if (std::abs(a[r][p]) > std::abs(a[piv][p])) piv = r;
            }
            if (!(std::abs(a[piv][p]) > 1e-12 * std::max(1.0, std::abs(m[0][0])))) {
                ok = false;
                break;
            }
            for (int c = 0; c < 4; ++c) std::swap(a[p][c], a[piv][c]);
            for (int r = 0; r < dim; ++r) {
                if (r == p) continue;
                const double f = a[r][p] / a[p][p];
                for (int c = p; c < 4; ++c) a[r][c] -= f * a[p][c];
            }
        }
        if (!ok) continue;
        for (int r = 0; r < 3; ++r) coef[r] = r < dim ? a[r][3] / a[r][r] : 0.0;
        break;
    }
    q.c0 = coef[0];
    q.c1 = w > 0.0 ? coef[1] / w : 0.0;
    q.c2 = w > 0.0 ? coef[2] / (w * w) : 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double t = x[k] - q.x0;
        q.max_residual = std::max(q.max_residual, std::abs(y[k] - (q.c0 + q.c1 * t + q.c2 * t * t)));
    }
    return q;
}

/// Composite Simpson for an even number of intervals, trapezoid otherwise.
inline double integrate_uniform(const std::vector<double>& y, double h) {
    const std::size_t n = y.size() - 1;
    if (n == 0) return 0.0;
    if (n % 2 == 0) {
        double acc = y.front() + y.back();
        for (std::size_t k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * y[k];
        return acc * h / 3.0;
    }
    double acc = 0.5 * (y.front() + y.back());
    for (std::size_t k = 1; k < n; ++k) acc += y[k];
    return acc * h;
}

inline nlohmann::json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Homogeneity

struct HomogeneityFit {
    double alpha_hat = 0.0;
    /// max over used rays of |local log-slope - alpha_hat| and |ray slope - alpha_hat|.
    double deviation = 0.0;
    int rays_used = 0;

    nlohmann::json to_json() const {
        return {{"alpha_hat", alpha_hat}, {"deviation", deviation}, {"rays_used", rays_used}};
    }
};

/// alpha_hat is the mean over rays of the least-squares slope of -ln|u| against s.
/// Rays where |u| comes within 1e-12 max|u| of zero are skipped.
inline HomogeneityFit homogeneity_fit(const VectorField& u) {
    const auto& g = u.grid;
    double umax = 0.0;
    std::vector<double> mag(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        mag[k] = std::hypot(u.ur[k], u.utheta[k]);
        umax = std::max(umax, mag[k]);
    }
    if (!(umax > 0.0)) throw Error(ErrorKind::DegenerateField, "velocity vanishes everywhere");
    const double floor = 1e-12 * umax;

    std::vector<double> s(g.nodes_s());
    for (int i = 0; i < g.nodes_s(); ++i) s[i] = g.s(i);
    fd::LineStencil d1(g.nodes_s(), g.h_s(), 1, 2);
    std::vector<double> slopes;
    std::vector<std::vector<double>> local;
    for (int j = 0; j < g.nodes_theta(); ++j) {
        std::vector<double> L(g.nodes_s());
        bool ok = true;
        for (int i = 0; i < g.nodes_s(); ++i) {
            const double m = mag[g.index(i, j)];
            if (!(m > floor)) {
                ok = false;
                break;
            }
            L[i] = std::log(m);
        }
        if (!ok) continue;
        slopes.push_back(-detail::least_squares(s, L).slope);
        std::vector<double> loc(g.nodes_s());
        for (int i = 0; i < g.nodes_s(); ++i) loc[i] = -d1.apply(i, [&](int m) { return L[m]; });
        local.push_back(std::move(loc));
    }
    if (slopes.empty()) throw Error(ErrorKind::DegenerateField, "no ray with |u| bounded away from 0");
    HomogeneityFit out;
    out.rays_used = static_cast<int>(slopes.size());
    out.alpha_hat = std::accumulate(slopes.begin(), slopes.end(), 0.0) / static_cast<double>(slopes.size());
    for (std::size_t r = 0; r < slopes.size(); ++r) {
        out.deviation = std::max(out.deviation, std::abs(slopes[r] - out.alpha_hat));
        for (double v : local[r]) out.deviation = std::max(out.deviation, std::abs(v - out.alpha_hat));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Recovery of g

struct FormFit {
    std::string form;          ///< "ExpForm" or "PowerForm"
    double exponent = 0.0;     ///< slope of ln|g| against z (ExpForm) or ln|z| (PowerForm)
    double coefficient = 0.0;  ///< K in g = K e^{slope z}, or C in g = C sgn(z) |z|^q
    double r_squared = 0.0;

    nlohmann::json to_json() const {
        return {{"form", form}, {"exponent", exponent}, {"coefficient", coefficient}, {"r_squared", r_squared}};
    }
};

struct GRecovery {
    std::vector<double> z;  ///< bin means of psi, strictly increasing
    std::vector<double> g;  ///< local quadratic fit of Delta psi at each bin mean
    double single_valued_defect = kInf;  ///< max in-bin spread about a local quadratic / max |Delta psi|
    double g_scale = 0.0;                ///< max |Delta psi| over used nodes
    std::optional<FormFit> exp_fit;
    std::optional<FormFit> power_fit;
    std::optional<FormFit> fit;  ///< the better of the two, present when the defect is small

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["bins"] = z.size();
        j["single_valued_defect"] = detail::num(single_valued_defect);
        j["g_scale"] = g_scale;
        j["exp_fit"] = exp_fit ? exp_fit->to_json() : nlohmann::json(nullptr);
        j["power_fit"] = power_fit ? power_fit->to_json() : nlohmann::json(nullptr);
        j["fit"] = fit ? fit->to_json() : nlohmann::json(nullptr);
        return j;
    }

    void write_csv(const std::filesystem::path& path) const {
        auto out = io::open_for_write(path);
        out << "z,g\n";
        for (std::size_t k = 0; k < z.size(); ++k) out << io::format_double(z[k]) << ',' << io::format_double(g[k]) << '\n';
    }
};

inline constexpr double kFitDefectThreshold = 1e-2;
inline constexpr int kMinRecoveryNodes = 100;

/// Bins the (psi, Delta psi) scatter of nodes where Delta psi is present into
/// n_bins equal-count psi-quantile bins and fits a quadratic in each bin.
inline GRecovery recover_g(const ScalarField& psi, const ScalarField& lap, int n_bins = 256,
                           double fit_threshold = kFitDefectThreshold) {
    require_same_grid(psi.grid, lap.grid);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < psi.vals.size(); ++k) {
        if (std::isfinite(lap.vals[k]) && std::isfinite(psi.vals[k])) pts.emplace_back(psi.vals[k], lap.vals[k]);
    }
    if (static_cast<int>(pts.size()) < kMinRecoveryNodes) {
        throw Error(ErrorKind::InvalidGrid, "g recovery needs at least 100 nodes with a Laplacian value");
    }
    std::sort(pts.begin(), pts.end());
    GRecovery rec;
    for (const auto& p : pts) rec.g_scale = std::max(rec.g_scale, std::abs(p.second));
    const std::size_t n = pts.size();
    const std::size_t bins = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(n_bins, 1)), 1, n / 2);
    double spread = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t lo = b * n / bins, hi = (b + 1) * n / bins;
        std::vector<double> x, y;
        for (std::size_t k = lo; k < hi; ++k) {
            x.push_back(pts[k].first);
            y.push_back(pts[k].second);
        }
        const auto qf = detail::local_quadratic(x, y);
        const double zm = qf.x0, gm = qf.c0;
        spread = std::max(spread, qf.max_residual);
        if (!rec.z.empty() && !(zm > rec.z.back())) {
            // Equal psi across a bin boundary: merge into the previous bin.
            rec.g.back() = 0.5 * (rec.g.back() + gm);
            continue;
        }
        rec.z.push_back(zm);
        rec.g.push_back(gm);
    }
    rec.single_valued_defect = rec.g_scale > 0.0 ? spread / rec.g_scale : spread;

    const bool g_pos = std::all_of(rec.g.begin(), rec.g.end(), [](double v) { return v > 0.0; });
    const bool g_neg = std::all_of(rec.g.begin(), rec.g.end(), [](double v) { return v < 0.0; });
    if ((g_pos || g_neg) && rec.z.size() >= 3) {
        const double sg = g_pos ? 1.0 : -1.0;
        std::vector<double> lg(rec.g.size());
        for (std::size_t k = 0; k < lg.size(); ++k) lg[k] = std::log(std::abs(rec.g[k]));
        const auto ef = detail::least_squares(rec.z, lg);
        rec.exp_fit = FormFit{"ExpForm", ef.slope, sg * std::exp(ef.intercept), ef.r_squared};
        const bool z_pos = std::all_of(rec.z.begin(), rec.z.end(), [](double v) { return v > 0.0; });
        const bool z_neg = std::all_of(rec.z.begin(), rec.z.end(), [](double v) { return v < 0.0; });
        if (z_pos || z_neg) {
            const double sz = z_pos ? 1.0 : -1.0;
            std::vector<double> lz(rec.z.size());
            for (std::size_t k = 0; k < lz.size(); ++k) lz[k] = std::log(std::abs(rec.z[k]));
            const auto pf = detail::least_squares(lz, lg);
            rec.power_fit = FormFit{"PowerForm", pf.slope, sg * sz * std::exp(pf.intercept), pf.r_squared};
        }
    }
    if (rec.single_valued_defect < fit_threshold) {
        if (rec.exp_fit && (!rec.power_fit || rec.exp_fit->r_squared >= rec.power_fit->r_squared)) rec.fit = rec.exp_fit;
        else if (rec.power_fit) rec.fit = rec.power_fit;
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Functional relations

/// g(z) = 4 g(z + c ln 2).
struct Thm1Relation {
    double c = 1.0;
};
/// g(z) = 2^{1+alpha} g(2^{1-alpha} z).
struct Thm2Relation {
    double alpha = 2.0;
};
using GRelation = std::variant<Thm1Relation, Thm2Relation>;

struct FunctionalDefect {
    double defect = kInf;      ///< max |g(z) - k g(m(z))| / max |g| over the overlap
    double abs_defect = kInf;  ///< same, unnormalized
    int points = 0;
    double z_lo = 0.0;
    double z_hi = 0.0;

    nlohmann::json to_json() const {
        return {{"defect", detail::num(defect)}, {"abs_defect", detail::num(abs_defect)}, {"points", points},
                {"z_lo", z_lo}, {"z_hi", z_hi}};
    }
};

inline FunctionalDefect g_functional_check(const GRecovery& rec, const GRelation& rel) {
    if (rec.z.size() < 2) throw Error(ErrorKind::InsufficientOverlap, "recovered g has fewer than 2 bins");
    auto map = [&](double z) {
        return std::visit(
            [z](const auto& r) -> double {
                using T = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<T, Thm1Relation>) return z + r.c * std::log(2.0);
                else return std::pow(2.0, 1.0 - r.alpha) * z;
            },
            rel);
    };
    const double k = std::visit(
        [](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Thm1Relation>) return 4.0;
            else return std::pow(2.0, 1.0 + r.alpha);
        },
        rel);
    const GTabulated tab{rec.z, rec.g, Extrapolation::Clamp};
    const double zmin = rec.z.front(), zmax = rec.z.back();
    FunctionalDefect out;
    out.abs_defect = 0.0;
    double gmax = 0.0;
    out.z_lo = kInf;
    out.z_hi = -kInf;
    for (double z : rec.z) {
        const double m = map(z);
        if (!(m >= zmin && m <= zmax)) continue;
        const double lhs = g_value(tab, z), rhs = k * g_value(tab, m);
        out.abs_defect = std::max(out.abs_defect, std::abs(lhs - rhs));
        gmax = std::max({gmax, std::abs(lhs), std::abs(rhs)});
        out.z_lo = std::min(out.z_lo, z);
        out.z_hi = std::max(out.z_hi, z);
        ++out.points;
    }
    if (out.points < 3) {
        throw Error(ErrorKind::InsufficientOverlap,
                    "only " + std::to_string(out.points) + " recovered samples have their image inside the range");
    }
    out.defect = gmax > 0.0 ? out.abs_defect / gmax : out.abs_defect;
    return out;
}

// ---------------------------------------------------------------------------
// Jacobian identity

struct JacobianReport {
    double normalized_max = 0.0;
    int nodes = 0;
    bool laplacian_resolved = true;  ///< false when Delta psi is below the stencil error scale

    nlohmann::json to_json() const {
        return {{"normalized_max", normalized_max}, {"nodes", nodes}, {"laplacian_resolved", laplacian_resolved}};
    }
};

/// max over nodes of |L_s psi_t - L_t psi_s| / (|grad L| |grad psi| + floor) with
/// central differences in (s, theta), at nodes whose four neighbours carry L.
/// floor = 1e-12 max|grad psi| max(max|grad L|, max|grad psi|).
/// A Laplacian with max|L| under (h_s^2 + h_theta^2 + 1e-12 / h^2) max|psi| / r_min^2 is
/// indistinguishable from 0 at this resolution; the report then has normalized_max = 0
/// and laplacian_resolved = false.
inline JacobianReport jacobian_check(const ScalarField& lap, const ScalarField& psi) {
    require_same_grid(lap.grid, psi.grid);
    const auto& g = psi.grid;
    if (g.nodes_s() < 5 || g.nodes_theta() < 5) throw Error(ErrorKind::InvalidGrid, "Jacobian check needs 5x5 nodes");
    const double hs = g.h_s(), ht = g.h_theta();
    struct Node {
        double ls, lt, ps, pt;
    };
    std::vector<Node> nodes;
    double gl = 0.0, gp = 0.0;
    for (int i = 1; i < g.n_s(); ++i) {
        for (int j = 1; j < g.n_theta(); ++j) {
            const double a = lap.at(i + 1, j), b = lap.at(i - 1, j), c = lap.at(i, j + 1), d = lap.at(i, j - 1);
            if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d)) continue;
            Node n{(a - b) / (2 * hs), (c - d) / (2 * ht), (psi.at(i + 1, j) - psi.at(i - 1, j)) / (2 * hs),
                   (psi.at(i, j + 1) - psi.at(i, j - 1)) / (2 * ht)};
            gl = std::max(gl, std::hypot(n.ls, n.lt));
            gp = std::max(gp, std::hypot(n.ps, n.pt));
            nodes.push_back(n);
        }
    }
    JacobianReport out;
    out.nodes = static_cast<int>(nodes.size());
    double lmax = 0.0, pmax = 0.0;
    for (std::size_t k = 0; k < psi.vals.size(); ++k) {
        if (std::isfinite(lap.vals[k])) lmax = std::max(lmax, std::abs(lap.vals[k]));
        pmax = std::max(pmax, std::abs(psi.vals[k]));
    }
    const double hmin = std::min(hs, ht);
    const double resolution = (hs * hs + ht * ht + 1e-12 / (hmin * hmin)) * pmax * std::exp(-2.0 * g.s_min());
    if (lmax <= resolution) {
        out.laplacian_resolved = false;
        return out;
    }
    const double floor = std::max(1e-12 * gp * std::max(gl, gp), std::numeric_limits<double>::min());
    for (const auto& n : nodes) {
        const double jac = std::abs(n.ls * n.pt - n.lt * n.ps);
        out.normalized_max =
            std::max(out.normalized_max, jac / (std::hypot(n.ls, n.lt) * std::hypot(n.ps, n.pt) + floor));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Level sets

enum class Orientation { OverR, OverTheta };

struct LevelSetResult {
    bool is_graph = false;
    std::vector<std::pair<double, double>> curve;  ///< (s, theta) crossing points
    std::vector<int> crossings;                    ///< per column (OverR) or row (OverTheta)
    int span_lo = -1;
    int span_hi = -1;

    nlohmann::json to_json() const {
        return {{"is_graph", is_graph}, {"points", curve.size()}, {"span_lo", span_lo}, {"span_hi", span_hi}};
    }
};

/// Extracts {psi = level} line by line. OverR treats the curve as theta(s) and
/// scans every s-column along theta; OverTheta scans every theta-row along s.
/// The scanned derivative must be nonzero with one sign at interior nodes.
inline LevelSetResult level_set_check(const ScalarField& psi, double level, Orientation orient) {
    const auto& g = psi.grid;
    const bool over_r = orient == Orientation::OverR;
    const auto deriv = over_r ? d_theta(g, psi.vals, 1) : d_s(g, psi.vals, 1);
    double dmax = 0.0;
    for (int i = 1; i < g.n_s(); ++i) {
        for (int j = 1; j < g.n_theta(); ++j) dmax = std::max(dmax, std::abs(deriv[g.index(i, j)]));
    }
    const double floor = 1e-12 * std::max(dmax, 1e-300);
    auto sign_of = [&](double d) { return d > floor ? 1 : (d < -floor ? -1 : 0); };
    const int sign = sign_of(deriv[g.index(1, 1)]);
    for (int i = 1; i < g.n_s(); ++i) {
        for (int j = 1; j < g.n_theta(); ++j) {
            const int sg = sign_of(deriv[g.index(i, j)]);
            if (sg == 0 || sg != sign) {
                throw NodeError(ErrorKind::MonotonicityViolated,
                                std::string(over_r ? "d_theta psi" : "d_s psi") + " is not sign-definite at node (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")",
                                i, j);
            }
        }
    }

    LevelSetResult out;
    const int lines = over_r ? g.nodes_s() : g.nodes_theta();
    const int along = over_r ? g.nodes_theta() : g.nodes_s();
    out.crossings.assign(lines, 0);
    auto value = [&](int line, int k) { return over_r ? psi.at(line, k) : psi.at(k, line); };
    auto coord = [&](int line, int k, double t) -> std::pair<double, double> {
        if (over_r) return {g.s(line), std::lerp(g.theta(k), g.theta(k + 1), t)};
        return {std::lerp(g.s(k), g.s(k + 1), t), g.theta(line)};
    };
    for (int line = 0; line < lines; ++line) {
        for (int k = 0; k < along; ++k) {
            const double a = value(line, k) - level;
            if (a == 0.0) {
                ++out.crossings[line];
                out.curve.push_back(coord(line, std::min(k, along - 2), k == along - 1 ? 1.0 : 0.0));
                continue;
            }
            if (k + 1 < along) {
                const double b = value(line, k + 1) - level;
                if (a * b < 0.0) {
                    ++out.crossings[line];
                    out.curve.push_back(coord(line, k, a / (a - b)));
                }
            }
        }
    }
    for (int line = 0; line < lines; ++line) {
        if (out.crossings[line] > 0) {
            if (out.span_lo < 0) out.span_lo = line;
            out.span_hi = line;
        }
    }
    out.is_graph = out.span_lo >= 0;
    for (int line = std::max(out.span_lo, 0); out.span_lo >= 0 && line <= out.span_hi; ++line) {
        if (out.crossings[line] != 1) out.is_graph = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sliding

struct SlidingResult {
    double min_w = kInf;
    double tau = 0.0;
    double s = 0.0;
    double theta = 0.0;
    std::vector<double> per_tau_min;

    nlohmann::json to_json() const {
        return {{"min_w", detail::num(min_w)}, {"tau", tau}, {"s", s}, {"theta", theta}, {"per_tau_min", per_tau_min}};
    }
};

/// Bilinear interpolation of a field at (s, theta) inside the grid rectangle.
inline double bilinear(const ScalarField& f, double s, double theta) {
    const auto& g = f.grid;
    const double x = (s - g.s_min()) / g.h_s(), y = theta / g.h_theta();
    const int i = std::clamp(static_cast<int>(std::floor(x)), 0, g.n_s() - 1);
    const int j = std::clamp(static_cast<int>(std::floor(y)), 0, g.n_theta() - 1);
    const double tx = std::clamp(x - i, 0.0, 1.0), ty = std::clamp(y - j, 0.0, 1.0);
    const double a = std::lerp(f.at(i, j), f.at(i + 1, j), tx);
    const double b = std::lerp(f.at(i, j + 1), f.at(i + 1, j + 1), tx);
    return std::lerp(a, b, ty);
}

/// min over tau and over grid nodes of the overlap of
/// w^tau(s, theta) = Psi(s + tau xi1, theta + tau xi2) - Psi(s, theta).
/// The caller declares Psi increasing in theta; decreasing data should be negated.
inline SlidingResult sliding_check(const ScalarField& Psi, std::pair<double, double> xi,
                                   const std::vector<double>& taus) {
    const auto& g = Psi.grid;
    if (!(xi.second > 0.0)) throw Error(ErrorKind::ParameterDomain, "sliding direction needs xi2 > 0");
    const double eps = 1e-12;
    SlidingResult out;
    for (double tau : taus) {
        const double ds = tau * xi.first, dt = tau * xi.second;
        if (!(dt < g.theta0()) || !(std::abs(ds) < g.s_max() - g.s_min())) {
            throw Error(ErrorKind::EmptyOverlap, "shift tau=" + io::format_double(tau) + " leaves no overlap");
        }
        double m = kInf;
        for (int i = 0; i < g.nodes_s(); ++i) {
            const double s2 = g.s(i) + ds;
            if (s2 < g.s_min() - eps || s2 > g.s_max() + eps) continue;
            for (int j = 0; j < g.nodes_theta(); ++j) {
                const double t2 = g.theta(j) + dt;
                if (t2 > g.theta0() + eps) continue;
                const double w = bilinear(Psi, std::clamp(s2, g.s_min(), g.s_max()), std::min(t2, g.theta0())) -
                                 Psi.at(i, j);
                m = std::min(m, w);
                if (w < out.min_w) {
                    out.min_w = w;
                    out.tau = tau;
                    out.s = g.s(i);
                    out.theta = g.theta(j);
                }
            }
        }
        if (!std::isfinite(m)) throw Error(ErrorKind::EmptyOverlap, "no grid node in the shifted overlap");
        out.per_tau_min.push_back(m);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Boundary hypotheses

struct EdgeConstant {
    double value = 0.0;
    double residual = 0.0;  ///< max deviation of the edge samples from `value`

    nlohmann::json to_json() const { return {{"value", value}, {"residual", residual}}; }
};

struct BoundaryReport {
    double alpha = 1.0;
    EdgeConstant c1, c2, c3, c4;
    /// d_theta(r u_r) on theta = 0 (alpha = 1 it equals c3).
    EdgeConstant A;
    std::optional<double> radial_ratio_defect;  ///< max |u(1) - 2^alpha u(2)| and derivative relation
    std::optional<double> r0;
    std::optional<double> flux_value;
    std::optional<double> flux_margin;  ///< flux - (c1 - c2) / (1 - alpha) r0^-alpha
    double f_integral = 0.0;                ///< int_0^theta0 r^alpha u_r
    double mass_identity_defect = 0.0;      ///< |c2 - c1 - (alpha - 1) int f|
    std::optional<double> rotation_margin;  ///< |c| (c3 / c - (1 - alpha)), c = c1
    bool f_sign_definite = false;
    bool inconsistent_hypotheses = false;

    nlohmann::json to_json() const {
        auto opt = [](const std::optional<double>& v) { return v ? detail::num(*v) : nlohmann::json(nullptr); };
        nlohmann::json j;
        j["alpha"] = alpha;
        j["c1"] = c1.to_json();
        j["c2"] = c2.to_json();
        j["c3"] = c3.to_json();
        j["c4"] = c4.to_json();
        j["A"] = A.to_json();
        j["radial_ratio_defect"] = opt(radial_ratio_defect);
        j["r0"] = opt(r0);
        j["flux_value"] = opt(flux_value);
        j["flux_margin"] = opt(flux_margin);
        j["f_integral"] = f_integral;
        j["mass_identity_defect"] = mass_identity_defect;
        j["rotation_margin"] = opt(rotation_margin);
        j["f_sign_definite"] = f_sign_definite;
        j["inconsistent_hypotheses"] = inconsistent_hypotheses;
        return j;
    }
};

struct BoundaryOptions {
    std::optional<double> r0;  ///< radius of the flux row; must be a grid row
    int accuracy = 6;          ///< difference order of the one-sided edge derivatives
    int corner_skip = 2;       ///< edge nodes dropped next to each end of an edge
};

/// Fits the edge constants of r^alpha u_theta and d_theta(r^alpha u_r) on theta = 0
/// and theta = theta0, and evaluates the radial, flux and mass relations.
inline BoundaryReport boundary_report(const VectorField& u, double alpha, const BoundaryOptions& opt = {}) {
    const auto& g = u.grid;
    const int lo = opt.corner_skip, hi = g.n_s() - opt.corner_skip;
    if (hi < lo) throw Error(ErrorKind::InvalidGrid, "edge too short after dropping corner nodes");
    BoundaryReport rep;
    rep.alpha = alpha;

    std::vector<double> ra_ut(g.size()), ra_ur(g.size()), r_ur(g.size());
    for (int i = 0; i < g.nodes_s(); ++i) {
        const double ra = std::exp(alpha * g.s(i)), r = g.r(i);
        for (int j = 0; j < g.nodes_theta(); ++j) {
            const auto k = g.index(i, j);
            ra_ut[k] = ra * u.utheta[k];
            ra_ur[k] = ra * u.ur[k];
            r_ur[k] = r * u.ur[k];
        }
    }
    fd::LineStencil dth(g.nodes_theta(), g.h_theta(), 1, opt.accuracy);
    auto edge_fit = [&](auto&& sample) {
        std::vector<double> vals;
        for (int i = lo; i <= hi; ++i) vals.push_back(sample(i));
        EdgeConstant e;
        e.value = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
        for (double v : vals) e.residual = std::max(e.residual, std::abs(v - e.value));
        return e;
    };
    auto theta_deriv = [&](const std::vector<double>& f, int i, int j) {
        return dth.apply(j, [&](int m) { return f[g.index(i, m)]; });
    };
    const int top = g.n_theta();
    rep.c1 = edge_fit([&](int i) { return ra_ut[g.index(i, 0)]; });
    rep.c2 = edge_fit([&](int i) { return ra_ut[g.index(i, top)]; });
    rep.c3 = edge_fit([&](int i) { return theta_deriv(ra_ur, i, 0); });
    rep.c4 = edge_fit([&](int i) { return theta_deriv(ra_ur, i, top); });
    rep.A = edge_fit([&](int i) { return theta_deriv(r_ur, i, 0); });

    const auto row1 = g.row_at_radius(1.0), row2 = g.row_at_radius(2.0);
    if (row1 && row2) {
        const auto dut = d_s(g, u.utheta, 1, opt.accuracy);
        const double k1 = std::pow(2.0, alpha), k2 = std::pow(2.0, alpha + 1.0);
        double d = 0.0;
        for (int j = 0; j <= top; ++j) {
            const auto a = g.index(*row1, j), b = g.index(*row2, j);
            d = std::max(d, std::abs(u.ur[a] - k1 * u.ur[b]));
            d = std::max(d, std::abs(u.utheta[a] - k1 * u.utheta[b]));
            const double dr1 = dut[a] / g.r(*row1), dr2 = dut[b] / g.r(*row2);
            d = std::max(d, std::abs(dr1 - k2 * dr2));
        }
        rep.radial_ratio_defect = d;
    }

    int frow = g.n_s() / 2;
    if (opt.r0) {
        const auto row = g.row_at_radius(*opt.r0);
        if (!row) throw Error(ErrorKind::EdgeNotOnGrid, "r0=" + io::format_double(*opt.r0) + " is not a grid row");
        frow = *row;
        std::vector<double> ur_row(g.nodes_theta());
        for (int j = 0; j <= top; ++j) ur_row[j] = u.ur[g.index(frow, j)];
        rep.r0 = *opt.r0;
        rep.flux_value = detail::integrate_uniform(ur_row, g.h_theta());
        if (alpha != 1.0) {
            rep.flux_margin =
                *rep.flux_value - (rep.c1.value - rep.c2.value) / (1.0 - alpha) * std::pow(*opt.r0, -alpha);
        }
    }
    std::vector<double> f_row(g.nodes_theta());
    for (int j = 0; j <= top; ++j) f_row[j] = ra_ur[g.index(frow, j)];
    rep.f_integral = detail::integrate_uniform(f_row, g.h_theta());
    rep.mass_identity_defect = std::abs(rep.c2.value - rep.c1.value - (alpha - 1.0) * rep.f_integral);
    if (rep.c1.value != 0.0) {
        const double c = rep.c1.value;
        rep.rotation_margin = std::abs(c) * (rep.c3.value / c - (1.0 - alpha));
    }
    const auto [fmin, fmax] = std::minmax_element(f_row.begin(), f_row.end());
    const double fzero = 1e-12 * std::max(std::abs(*fmin), std::abs(*fmax));
    rep.f_sign_definite = *fmin > fzero || *fmax < -fzero;
    rep.inconsistent_hypotheses = g.domain().is_full_turn() && alpha != 1.0 && rep.f_sign_definite;
    return rep;
}

}  // namespace heuler
