#pragma once

/// @file elliptic_solver.hpp
/// @brief Damped Newton solver for L Psi = F(s) g(frame argument) + q on a
/// log-polar rectangle, with Dirichlet theta-edges and a choice of s-side
/// condition (periodic, one-sided Neumann, or Dirichlet at both ends).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <nlohmann/json.hpp>

#include "heuler/domain.hpp"
#include "heuler/error.hpp"
#include "heuler/fields.hpp"
#include "heuler/io.hpp"

namespace heuler {

// ---------------------------------------------------------------------------
// Operator

/// a11 d_ss + 2 a12 d_s d_theta + a22 d_thth + b1 d_s + b2 d_theta + c0.
struct EllipticOperator {
    double a11 = 1.0;
    double a12 = 0.0;
    double a22 = 1.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double c0 = 0.0;

    void validate() const {
        if (!(a11 > 0.0) || !(a11 * a22 - a12 * a12 > 0.0)) {
            throw Error(ErrorKind::InvalidOperator, "operator is not uniformly elliptic");
        }
        for (double x : {a11, a12, a22, b1, b2, c0}) {
            if (!std::isfinite(x)) throw Error(ErrorKind::InvalidOperator, "operator coefficients must be finite");
        }
    }

    static EllipticOperator laplacian() { return {}; }
    /// d_ss + d_thth + 2(1 - alpha) d_s + (1 - alpha)^2.
    static EllipticOperator general_frame(double alpha) {
        const double k = 1.0 - alpha;
        return {1.0, 0.0, 1.0, 2.0 * k, 0.0, k * k};
    }

    bool operator==(const EllipticOperator&) const = default;

    nlohmann::json to_json() const {
        return {{"a11", a11}, {"a12", a12}, {"a22", a22}, {"b1", b1}, {"b2", b2}, {"c0", c0}};
    }
};

// ---------------------------------------------------------------------------
// Nonlinearity

struct GZero {};
/// g(z) = K exp(-2 z / c).
struct GExp {
    double K = 0.0;
    double c = 1.0;
};
/// g(z) = Cplus |z|^q for z > 0 and Cminus |z|^q for z < 0.
/// For q < 1 the admissible z-range must be declared and exclude 0.
struct GPower {
    double Cplus = 0.0;
    double Cminus = 0.0;
    double q = 1.0;
    std::optional<std::pair<double, double>> z_range;
};
enum class Extrapolation { Clamp, Linear };
/// Piecewise-linear g through (z[k], g[k]), z strictly increasing.
struct GTabulated {
    std::vector<double> z;
    std::vector<double> g;
    Extrapolation extrapolation = Extrapolation::Clamp;
};

using GSpec = std::variant<GZero, GExp, GPower, GTabulated>;

inline void validate_g(const GSpec& spec) {
    std::visit(
        [](const auto& g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, GExp>) {
                if (g.c == 0.0 || !std::isfinite(g.c) || !std::isfinite(g.K)) {
                    throw Error(ErrorKind::ParameterDomain, "ExpForm needs finite K and c != 0");
                }
            } else if constexpr (std::is_same_v<T, GPower>) {
                if (!std::isfinite(g.q) || !std::isfinite(g.Cplus) || !std::isfinite(g.Cminus)) {
                    throw Error(ErrorKind::ParameterDomain, "PowerForm coefficients must be finite");
                }
                if (g.q < 1.0) {
                    if (!g.z_range || !(g.z_range->first < g.z_range->second) ||
                        (g.z_range->first <= 0.0 && g.z_range->second >= 0.0)) {
                        throw Error(ErrorKind::ParameterDomain,
                                    "PowerForm with q < 1 needs a z-range bounded away from 0");
                    }
                }
            } else if constexpr (std::is_same_v<T, GTabulated>) {
                if (g.z.size() < 2 || g.z.size() != g.g.size()) {
                    throw Error(ErrorKind::ParameterDomain, "tabulated g needs >= 2 matching samples");
                }
                for (std::size_t k = 1; k < g.z.size(); ++k) {
                    if (!(g.z[k] > g.z[k - 1])) throw Error(ErrorKind::ParameterDomain, "tabulated z must increase");
                }
            }
        },
        spec);
}

namespace detail {

inline std::pair<double, double> tab_eval(const GTabulated& t, double z) {
    const auto& Z = t.z;
    const auto& G = t.g;
    const std::size_t n = Z.size();
    if (z <= Z.front() || z >= Z.back()) {
        const bool lo = z <= Z.front();
        const std::size_t a = lo ? 0 : n - 2;
        const double slope = (G[a + 1] - G[a]) / (Z[a + 1] - Z[a]);
        const double z0 = lo ? Z.front() : Z.back();
        const double g0 = lo ? G.front() : G.back();
        if (t.extrapolation == Extrapolation::Clamp) return {g0, z == z0 ? slope : 0.0};
        return {g0 + slope * (z - z0), slope};
    }
    const auto it = std::upper_bound(Z.begin(), Z.end(), z);
    const std::size_t b = static_cast<std::size_t>(it - Z.begin());
    const std::size_t a = b - 1;
    const double slope = (G[b] - G[a]) / (Z[b] - Z[a]);
    return {G[a] + slope * (z - Z[a]), slope};
}

}  // namespace detail

/// g(z) and g'(z).
inline std::pair<double, double> g_eval(const GSpec& spec, double z) {
    return std::visit(
        [z](const auto& g) -> std::pair<double, double> {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, GZero>) {
                return {0.0, 0.0};
            } else if constexpr (std::is_same_v<T, GExp>) {
                const double e = g.K * std::exp(-2.0 * z / g.c);
                return {e, -2.0 / g.c * e};
            } else if constexpr (std::is_same_v<T, GPower>) {
                if (z == 0.0) return {0.0, g.q > 1.0 ? 0.0 : (g.q == 1.0 ? 0.5 * (g.Cplus - g.Cminus) : kInf)};
                const double C = z > 0.0 ? g.Cplus : g.Cminus;
                const double az = std::abs(z);
                const double val = C * std::pow(az, g.q);
                const double der = (z > 0.0 ? 1.0 : -1.0) * g.q * C * std::pow(az, g.q - 1.0);
                return {val, der};
            } else {
                return detail::tab_eval(g, z);
            }
        },
        spec);
}

inline double g_value(const GSpec& spec, double z) { return g_eval(spec, z).first; }

inline std::string g_name(const GSpec& spec) {
    static constexpr const char* names[] = {"Zero", "ExpForm", "PowerForm", "Tabulated"};
    return names[spec.index()];
}

inline nlohmann::json g_to_json(const GSpec& spec) {
    return std::visit(
        [](const auto& g) -> nlohmann::json {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, GZero>) return {{"form", "Zero"}};
            else if constexpr (std::is_same_v<T, GExp>) return {{"form", "ExpForm"}, {"K", g.K}, {"c", g.c}};
            else if constexpr (std::is_same_v<T, GPower>) {
                nlohmann::json j{{"form", "PowerForm"}, {"Cplus", g.Cplus}, {"Cminus", g.Cminus}, {"q", g.q}};
                if (g.z_range) j["z_range"] = {g.z_range->first, g.z_range->second};
                return j;
            } else {
                return {{"form", "Tabulated"}, {"z", g.z}, {"g", g.g},
                        {"extrapolation", g.extrapolation == Extrapolation::Clamp ? "clamp" : "linear"}};
            }
        },
        spec);
}

// ---------------------------------------------------------------------------
// Scenario tags and g construction

enum class TheoremCase {
    Thm1i,
    Thm1ii,
    Thm2_A1,
    Thm2_A2,
    Thm2_A3,
    Thm2_A4,
    Thm3,
    Thm4_B1,
    Thm4_B2,
    Thm4_B3,
    Thm4_B4,
    Thm5i,
    Thm5ii,
    Cor1,
    AppendixAtlas,
};

inline constexpr std::pair<TheoremCase, const char*> kTheoremCaseNames[] = {
    {TheoremCase::Thm1i, "Thm1i"},     {TheoremCase::Thm1ii, "Thm1ii"},   {TheoremCase::Thm2_A1, "Thm2_A1"},
    {TheoremCase::Thm2_A2, "Thm2_A2"}, {TheoremCase::Thm2_A3, "Thm2_A3"}, {TheoremCase::Thm2_A4, "Thm2_A4"},
    {TheoremCase::Thm3, "Thm3"},       {TheoremCase::Thm4_B1, "Thm4_B1"}, {TheoremCase::Thm4_B2, "Thm4_B2"},
    {TheoremCase::Thm4_B3, "Thm4_B3"}, {TheoremCase::Thm4_B4, "Thm4_B4"}, {TheoremCase::Thm5i, "Thm5i"},
    {TheoremCase::Thm5ii, "Thm5ii"},   {TheoremCase::Cor1, "Cor1"},       {TheoremCase::AppendixAtlas, "AppendixAtlas"},
};

inline std::string to_string(TheoremCase t) {
    for (const auto& [k, name] : kTheoremCaseNames) {
        if (k == t) return name;
    }
    return "?";
}

inline std::optional<TheoremCase> parse_theorem_case(std::string_view s) {
    for (const auto& [k, name] : kTheoremCaseNames) {
        if (s == name) return k;
    }
    return std::nullopt;
}

inline bool is_thm2_family(TheoremCase t) {
    return t == TheoremCase::Thm2_A1 || t == TheoremCase::Thm2_A2 || t == TheoremCase::Thm2_A3 ||
           t == TheoremCase::Thm2_A4 || t == TheoremCase::Thm5ii;
}

enum class Anchor { Bottom, Top };

/// Edge data from which g is reconstructed. Bottom is theta = 0, top is theta = theta0.
/// h0 / h1 are the working-frame values Psi there (C1 / C2 for alpha != 1, 0 / B for alpha = 1),
/// d0 / d1 the edge constants of d_theta(r^alpha u_r) (A or c3 / c4).
struct GConstants {
    double alpha = 1.0;
    double c = 0.0;
    std::optional<double> h0;
    std::optional<double> h1;
    std::optional<double> d0;
    std::optional<double> d1;
    Anchor anchor = Anchor::Bottom;
};

namespace detail {

inline std::optional<std::pair<double, double>> power_anchor(double alpha, double q, std::optional<double> h,
                                                             std::optional<double> d) {
    if (!h || !d || *h == 0.0) return std::nullopt;
    const double k = 1.0 - alpha;
    return std::pair{*h, (k * k * *h - *d) / std::pow(std::abs(*h), q)};
}

}  // namespace detail

/// The nonlinearity each scenario's functional equation forces.
/// alpha = 1 cases: Zero when c = 0; otherwise K exp(-2z/c) with K = -A at the
/// bottom anchor or K = -A exp(2B/c) at the top anchor (B = Psi on theta = theta0).
/// alpha != 1 cases: C^sign(h) |z|^q, q = (alpha + 1)/(alpha - 1), from
/// C^sign(h) |h|^q = (1 - alpha)^2 h - d on every edge with h != 0; a side
/// without edge data takes the odd extension -C of the other side.
inline GSpec make_g_spec(TheoremCase tag, const GConstants& k) {
    auto inconsistent = [&](const std::string& why) {
        throw Error(ErrorKind::InconsistentScenario, to_string(tag) + ": " + why);
    };
    auto exp_form = [&]() -> GSpec {
        if (k.c == 0.0) return GZero{};
        const bool top = k.anchor == Anchor::Top || tag == TheoremCase::Thm4_B4;
        if (top) {
            if (!k.d1 || !k.h1) inconsistent("top anchor needs A and B at theta = theta0");
            return GExp{-*k.d1 * std::exp(2.0 * *k.h1 / k.c), k.c};
        }
        if (!k.d0) inconsistent("bottom anchor needs A at theta = 0");
        return GExp{-*k.d0, k.c};
    };
    auto power_form = [&]() -> GSpec {
        if (k.alpha == 1.0) inconsistent("power form needs alpha != 1");
        const double q = (k.alpha + 1.0) / (k.alpha - 1.0);
        auto lo = detail::power_anchor(k.alpha, q, k.h0, k.d0);
        auto hi = detail::power_anchor(k.alpha, q, k.h1, k.d1);
        if (!lo && !hi) inconsistent("no edge with nonzero Psi and its d_theta(r^alpha u_r) constant");
        GPower g;
        g.q = q;
        std::optional<double> cp, cm;
        for (const auto& a : {lo, hi}) {
            if (!a) continue;
            auto& slot = a->first > 0.0 ? cp : cm;
            if (slot && std::abs(*slot - a->second) > 1e-4 * std::max(1.0, std::abs(a->second))) {
                inconsistent("edge relations give different coefficients for the same sign of z");
            }
            slot = a->second;
        }
        g.Cplus = cp.value_or(-cm.value_or(0.0));
        g.Cminus = cm.value_or(-cp.value_or(0.0));
        if (q < 1.0) {
            const double a = k.h0.value_or(*k.h1), b = k.h1.value_or(*k.h0);
            g.z_range = std::pair{std::min(a, b), std::max(a, b)};
        }
        validate_g(g);
        return g;
    };

    switch (tag) {
        case TheoremCase::Thm1i:
            if (k.c != 0.0) inconsistent("Thm1i requires c = 0");
            return GZero{};
        case TheoremCase::Thm4_B1:
        case TheoremCase::Thm4_B2:
            if (k.c != 0.0) inconsistent("B1/B2 require c = 0");
            return GZero{};
        case TheoremCase::Thm1ii:
        case TheoremCase::Thm4_B3:
        case TheoremCase::Thm4_B4:
            if (k.c == 0.0) inconsistent("this case requires c != 0");
            return exp_form();
        case TheoremCase::Thm5i:
            return exp_form();
        case TheoremCase::Thm2_A1:
        case TheoremCase::Thm2_A2:
        case TheoremCase::Thm2_A3:
        case TheoremCase::Thm2_A4:
        case TheoremCase::Thm5ii:
            return power_form();
        case TheoremCase::Thm3:
            if (k.alpha == 1.0) return GZero{};
            return power_form();
        case TheoremCase::Cor1:
        case TheoremCase::AppendixAtlas:
            inconsistent("scenario has no elliptic reduction");
    }
    return GZero{};
}

// ---------------------------------------------------------------------------
// Problem definition

struct PeriodicInS {
    double period = 0.0;
};
struct NeumannLeft {};
struct NeumannRight {};
struct DirichletBoth {};

using SideCondition = std::variant<PeriodicInS, NeumannLeft, NeumannRight, DirichletBoth>;

inline std::string side_name(const SideCondition& sc) {
    static constexpr const char* names[] = {"PeriodicInS", "NeumannLeft", "NeumannRight", "DirichletBoth"};
    return names[sc.index()];
}

/// Boundary values Psi(s, theta) on Dirichlet nodes.
using BoundaryData = std::function<double(double, double)>;

/// Boundary data that depends on theta only.
inline BoundaryData from_profile(std::function<double(double)> h) {
    return [h = std::move(h)](double, double th) { return h(th); };
}

struct SemilinearProblem {
    LogPolarGrid grid;
    EllipticOperator op;
    std::function<double(double)> F;  ///< empty means F = 1
    GSpec g = GZero{};
    FrameTag frame = RawFrame{};
    BoundaryData boundary;
    SideCondition side = DirichletBoth{};
    std::function<double(double, double)> forcing;  ///< optional q(s, theta)
};

enum class SolveStatus { Converged, NoConvergence, SingularJacobian };

inline std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "Converged";
        case SolveStatus::NoConvergence: return "NoConvergence";
        case SolveStatus::SingularJacobian: return "SingularJacobian";
    }
    return "?";
}

struct SolveOptions {
    double tol = 1e-9;
    int max_iter = 50;
    /// Node count up to which the Newton systems use the sparse direct solver.
    std::size_t direct_limit = 257u * 257u;
    int gs_max_sweeps = 200000;
    double gs_rel_tol = 1e-13;
};

struct SolveReport {
    int iterations = 0;
    double final_residual = kInf;
    double s_variance = kInf;
    bool converged = false;
    SolveStatus status = SolveStatus::NoConvergence;
    std::string linear_solver;
    std::vector<double> residual_history;
    std::vector<double> step_history;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["iterations"] = iterations;
        j["final_residual"] = final_residual;
        j["s_variance"] = s_variance;
        j["converged"] = converged;
        j["status"] = to_string(status);
        j["linear_solver"] = linear_solver;
        j["residual_history"] = residual_history;
        j["step_history"] = step_history;
        return j;
    }
};

struct SolveResult {
    ScalarField Psi;
    SolveReport report;
};

/// max over theta-rows of (max - min over s).
inline double s_variance(const ScalarField& Psi) {
    const auto& g = Psi.grid;
    double out = 0.0;
    for (int j = 0; j < g.nodes_theta(); ++j) {
        double lo = kInf, hi = -kInf;
        for (int i = 0; i < g.nodes_s(); ++i) {
            lo = std::min(lo, Psi.at(i, j));
            hi = std::max(hi, Psi.at(i, j));
        }
        out = std::max(out, hi - lo);
    }
    return out;
}

/// max over s-columns of (max - min over theta).
inline double theta_variance(const ScalarField& Psi) {
    const auto& g = Psi.grid;
    double out = 0.0;
    for (int i = 0; i < g.nodes_s(); ++i) {
        double lo = kInf, hi = -kInf;
        for (int j = 0; j < g.nodes_theta(); ++j) {
            lo = std::min(lo, Psi.at(i, j));
            hi = std::max(hi, Psi.at(i, j));
        }
        out = std::max(out, hi - lo);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Initial guesses

enum class InitShape { Random, Smooth };

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// base(s, theta) + amplitude * bump, where the bump is sin(pi theta/theta0) times
/// either seeded uniform noise in [-1, 1] or sin(pi (s - s_min)/(s_max - s_min)).
inline ScalarField perturbed_guess(const LogPolarGrid& grid, const BoundaryData& base, double amplitude,
                                   std::uint64_t seed = 0, InitShape shape = InitShape::Random) {
    std::mt19937_64 rng(seed);
    ScalarField out(grid);
    const double pi = std::numbers::pi;
    for (int i = 0; i < grid.nodes_s(); ++i) {
        for (int j = 0; j < grid.nodes_theta(); ++j) {
            const double s = grid.s(i), th = grid.theta(j);
            const double ang = std::sin(pi * th / grid.theta0());
            const double bump = shape == InitShape::Random
                                    ? 2.0 * unit_double(rng) - 1.0
                                    : std::sin(pi * (s - grid.s_min()) / (grid.s_max() - grid.s_min()));
            out.at(i, j) = base(s, th) + amplitude * ang * bump;
        }
    }
    return out;
}

/// Linear theta-interpolation of the theta-edge data, plus a perturbation.
inline ScalarField default_initial_guess(const SemilinearProblem& pb, double amplitude, std::uint64_t seed = 0,
                                         InitShape shape = InitShape::Random) {
    const double t0 = pb.grid.theta0();
    BoundaryData lin = [&pb, t0](double s, double th) {
        const double lo = pb.boundary(s, 0.0), hi = pb.boundary(s, t0);
        return lo + (hi - lo) * (th / t0);
    };
    return perturbed_guess(pb.grid, lin, amplitude, seed, shape);
}

// ---------------------------------------------------------------------------
// Solver

namespace detail {

/// Right-hand side F(s) * frame(g) and its Psi-derivative.
inline std::pair<double, double> frame_rhs(const SemilinearProblem& pb, double s, double Psi) {
    const double F = pb.F ? pb.F(s) : 1.0;
    return std::visit(
        [&](const auto& t) -> std::pair<double, double> {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, Alpha1Frame>) {
                const auto [g, dg] = g_eval(pb.g, Psi + t.c * s);
                const double w = std::exp(2.0 * s);
                return {F * w * g, F * w * dg};
            } else if constexpr (std::is_same_v<T, GeneralFrame>) {
                const double m = std::exp((1.0 - t.alpha) * s);
                const auto [g, dg] = g_eval(pb.g, m * Psi);
                const double w = std::exp((1.0 + t.alpha) * s);
                return {F * w * g, F * w * m * dg};
            } else {
                const auto [g, dg] = g_eval(pb.g, Psi);
                const double w = std::exp(2.0 * s);
                return {F * w * g, F * w * dg};
            }
        },
        pb.frame);
}

class Discretization {
public:
    explicit Discretization(const SemilinearProblem& pb) : pb_(pb), g_(pb.grid) {
        pb.op.validate();
        validate_g(pb.g);
        if (!pb.boundary) throw Error(ErrorKind::ParameterDomain, "boundary data is required");
        if (const auto* gf = std::get_if<GeneralFrame>(&pb.frame)) {
            if (!(pb.op == EllipticOperator::general_frame(gf->alpha))) {
                throw Error(ErrorKind::InvalidOperator, "GeneralFrame requires the conjugated Laplacian operator");
            }
        }
        const bool neumann = std::holds_alternative<NeumannLeft>(pb.side) || std::holds_alternative<NeumannRight>(pb.side);
        if (neumann && (pb.op.b1 != 0.0 || pb.op.b2 != 0.0)) {
            throw Error(ErrorKind::InvalidOperator, "Neumann side conditions need b1 = b2 = 0");
        }
        if (const auto* per = std::get_if<PeriodicInS>(&pb.side)) {
            const double span = g_.s_max() - g_.s_min();
            if (std::abs(per->period - span) > 1e-12 * std::max(1.0, span)) {
                throw Error(ErrorKind::InvalidGrid, "periodic side needs s_max - s_min equal to the period");
            }
        }
        const int ns = g_.n_s();
        periodic_ = std::holds_alternative<PeriodicInS>(pb.side);
        dir_lo_ = std::holds_alternative<DirichletBoth>(pb.side) || std::holds_alternative<NeumannRight>(pb.side);
        dir_hi_ = std::holds_alternative<DirichletBoth>(pb.side) || std::holds_alternative<NeumannLeft>(pb.side);
        id_.assign(g_.size(), -1);
        for (int i = 0; i <= ns; ++i) {
            if (periodic_ && i == ns) continue;
            if (i == 0 && dir_lo_) continue;
            if (i == ns && dir_hi_) continue;
            for (int j = 1; j < g_.n_theta(); ++j) {
                id_[g_.index(i, j)] = static_cast<int>(nodes_.size());
                nodes_.push_back({i, j});
            }
        }
        const double hs = g_.h_s(), ht = g_.h_theta();
        const auto& op = pb.op;
        // Stencil weights w[di + 1][dj + 1].
        w_[0][1] = op.a11 / (hs * hs) - op.b1 / (2.0 * hs);
        w_[2][1] = op.a11 / (hs * hs) + op.b1 / (2.0 * hs);
        w_[1][0] = op.a22 / (ht * ht) - op.b2 / (2.0 * ht);
        w_[1][2] = op.a22 / (ht * ht) + op.b2 / (2.0 * ht);
        w_[1][1] = -2.0 * op.a11 / (hs * hs) - 2.0 * op.a22 / (ht * ht) + op.c0;
        const double x = 2.0 * op.a12 / (4.0 * hs * ht);
        w_[2][2] = x;
        w_[0][0] = x;
        w_[2][0] = -x;
        w_[0][2] = -x;
    }

    std::size_t unknowns() const noexcept { return nodes_.size(); }

    /// Fills Dirichlet nodes and periodic copies of a full-grid field.
    void impose(ScalarField& Psi) const {
        for (int i = 0; i < g_.nodes_s(); ++i) {
            const double s = g_.s(i);
            Psi.at(i, 0) = pb_.boundary(s, 0.0);
            Psi.at(i, g_.n_theta()) = pb_.boundary(s, g_.theta0());
        }
        for (int j = 1; j < g_.n_theta(); ++j) {
            if (dir_lo_) Psi.at(0, j) = pb_.boundary(g_.s(0), g_.theta(j));
            if (dir_hi_) Psi.at(g_.n_s(), j) = pb_.boundary(g_.s(g_.n_s()), g_.theta(j));
        }
        if (periodic_) {
            for (int j = 0; j < g_.nodes_theta(); ++j) Psi.at(g_.n_s(), j) = Psi.at(0, j);
        }
    }

    Eigen::VectorXd gather(const ScalarField& Psi) const {
        Eigen::VectorXd x(static_cast<Eigen::Index>(nodes_.size()));
        for (std::size_t k = 0; k < nodes_.size(); ++k) x[k] = Psi.at(nodes_[k].first, nodes_[k].second);
        return x;
    }

    void scatter(const Eigen::VectorXd& x, ScalarField& Psi) const {
        for (std::size_t k = 0; k < nodes_.size(); ++k) Psi.at(nodes_[k].first, nodes_[k].second) = x[k];
        impose(Psi);
    }

    /// Residual vector and, when `jac` is non-null, the Jacobian.
    Eigen::VectorXd residual(const ScalarField& Psi, Eigen::SparseMatrix<double, Eigen::RowMajor>* jac) const {
        const auto n = static_cast<Eigen::Index>(nodes_.size());
        Eigen::VectorXd R(n);
        std::vector<Eigen::Triplet<double>> trip;
        if (jac) trip.reserve(nodes_.size() * 9);
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            const auto [i, j] = nodes_[k];
            const double s = g_.s(i), th = g_.theta(j);
            double acc = 0.0;
            for (int di = -1; di <= 1; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    const double w = w_[di + 1][dj + 1];
                    if (w == 0.0) continue;
                    const int ii = map_i(i + di);
                    const int jj = j + dj;
                    acc += w * Psi.at(ii, jj);
                    if (jac) {
                        const int col = id_[g_.index(ii, jj)];
                        if (col >= 0) trip.emplace_back(static_cast<int>(k), col, w);
                    }
                }
            }
            const auto [rhs, drhs] = frame_rhs(pb_, s, Psi.at(i, j));
            const double q = pb_.forcing ? pb_.forcing(s, th) : 0.0;
            R[static_cast<Eigen::Index>(k)] = acc - rhs - q;
            if (jac) trip.emplace_back(static_cast<int>(k), static_cast<int>(k), -drhs);
        }
        if (jac) {
            jac->resize(n, n);
            jac->setFromTriplets(trip.begin(), trip.end());
        }
        return R;
    }

    const std::vector<std::pair<int, int>>& nodes() const noexcept { return nodes_; }

private:
    int map_i(int i) const {
        const int ns = g_.n_s();
        if (periodic_) return ((i % ns) + ns) % ns;
        if (i < 0) return -i;            // mirror for NeumannLeft
        if (i > ns) return 2 * ns - i;   // mirror for NeumannRight
        return i;
    }

    const SemilinearProblem& pb_;
    const LogPolarGrid& g_;
    bool periodic_ = false;
    bool dir_lo_ = false;
    bool dir_hi_ = false;
    std::vector<int> id_;
    std::vector<std::pair<int, int>> nodes_;
    double w_[3][3] = {};
};

inline double max_abs(const Eigen::VectorXd& v) {
    double m = 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (!std::isfinite(v[k])) return kInf;
        m = std::max(m, std::abs(v[k]));
    }
    return m;
}

/// Red-black ordered Gauss-Seidel sweeps on a row-major sparse system.
inline Eigen::VectorXd red_black_gauss_seidel(const Eigen::SparseMatrix<double, Eigen::RowMajor>& A,
                                              const Eigen::VectorXd& b,
                                              const std::vector<std::pair<int, int>>& nodes, int max_sweeps,
                                              double rel_tol) {
    const auto n = A.rows();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Index> order;
    order.reserve(static_cast<std::size_t>(n));
    for (int color = 0; color < 2; ++color) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto [i, j] = nodes[static_cast<std::size_t>(k)];
            if ((i + j) % 2 == color) order.push_back(k);
        }
    }
    const double bnorm = std::max(max_abs(b), 1e-300);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (Eigen::Index k : order) {
            double diag = 0.0, sum = b[k];
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A, k); it; ++it) {
                if (it.col() == k) diag = it.value();
                else sum -= it.value() * x[it.col()];
            }
            x[k] = sum / diag;
        }
        if (sweep % 16 == 15 && max_abs(b - A * x) <= rel_tol * bnorm) break;
    }
    return x;
}

}  // namespace detail

/// Damped Newton on the 5-point (plus cross and centred first-order terms)
/// discretization. Each step is halved until the max-norm residual drops, down
/// to 2^-10; past that the best iterate is returned with NoConvergence.
inline SolveResult solve_semilinear(const SemilinearProblem& pb, const ScalarField& init, const SolveOptions& opt = {}) {
    require_same_grid(pb.grid, init.grid);
    detail::Discretization disc(pb);
    ScalarField Psi = init;
    disc.impose(Psi);
    SolveReport rep;
    const bool direct = pb.grid.size() <= opt.direct_limit;
    rep.linear_solver = direct ? "SparseLU" : "RedBlackGaussSeidel";

    Eigen::SparseMatrix<double, Eigen::RowMajor> J;
    Eigen::VectorXd R = disc.residual(Psi, &J);
    double norm = detail::max_abs(R);
    rep.residual_history.push_back(norm);
    constexpr double kMinStep = 0x1.0p-10;

    for (int it = 0; it < opt.max_iter && !(norm <= opt.tol); ++it) {
        Eigen::VectorXd dx;
        if (direct) {
            Eigen::SparseMatrix<double> Jc = J;
            Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
            lu.compute(Jc);
            if (lu.info() != Eigen::Success) {
                rep.status = SolveStatus::SingularJacobian;
                break;
            }
            dx = lu.solve(-R);
            if (lu.info() != Eigen::Success || !std::isfinite(dx.sum())) {
                rep.status = SolveStatus::SingularJacobian;
                break;
            }
        } else {
            dx = detail::red_black_gauss_seidel(J, -R, disc.nodes(), opt.gs_max_sweeps, opt.gs_rel_tol);
        }
        const Eigen::VectorXd x0 = disc.gather(Psi);
        double t = 1.0;
        bool accepted = false;
        ScalarField trial = Psi;
        while (t >= kMinStep) {
            disc.scatter(x0 + t * dx, trial);
            const Eigen::VectorXd Rt = disc.residual(trial, nullptr);
            const double nt = detail::max_abs(Rt);
            if (nt < norm) {
                Psi = trial;
                norm = nt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        ++rep.iterations;
        rep.step_history.push_back(accepted ? t : 0.0);
        if (!accepted) {
            rep.status = SolveStatus::NoConvergence;
            break;
        }
        rep.residual_history.push_back(norm);
        R = disc.residual(Psi, &J);
    }
    rep.final_residual = norm;
    rep.converged = norm <= opt.tol;
    if (rep.converged) rep.status = SolveStatus::Converged;
    rep.s_variance = s_variance(Psi);
    return {std::move(Psi), std::move(rep)};
}

}  // namespace heuler
