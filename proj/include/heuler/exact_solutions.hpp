#pragma once

/// @file exact_solutions.hpp
/// @brief Closed-form (-alpha)-homogeneous Euler solutions on sectors.
///
/// A homogeneous solution has u = r^-alpha (v(theta) e_theta + f(theta) e_r) and
/// P = p r^(-2 alpha), where (v, f, p) solve
///
///     v f' - alpha f^2 - v^2 - 2 alpha p = 0,
///     (1 - alpha) f + v' = 0.
///
/// Each family below is one explicit branch of that system. Shift constants are
/// supplied by the caller; construction only checks that the profile is finite
/// on [0, theta0] and reports the offending pole otherwise.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "heuler/domain.hpp"
#include "heuler/error.hpp"
#include "heuler/finite_difference.hpp"
#include "heuler/io.hpp"

namespace heuler {

enum class FamilyKind { RadialAlpha1, TanFamily, RationalFamily, TanhFamily, CosPowerFamily, SinFamily, PureRotation };

constexpr std::string_view to_string(FamilyKind k) {
    switch (k) {
        case FamilyKind::RadialAlpha1: return "RadialAlpha1";
        case FamilyKind::TanFamily: return "TanFamily";
        case FamilyKind::RationalFamily: return "RationalFamily";
        case FamilyKind::TanhFamily: return "TanhFamily";
        case FamilyKind::CosPowerFamily: return "CosPowerFamily";
        case FamilyKind::SinFamily: return "SinFamily";
        case FamilyKind::PureRotation: return "PureRotation";
    }
    return "?";
}

/// alpha = 1, v = 0: f = sign * sqrt(-2p).
struct RadialAlpha1Params {
    double p = -0.5;
    int sign = 1;
};
/// alpha = 1, v^2 + 2p > 0: f = k tan(k theta / v + C), k = sqrt(v^2 + 2p).
struct TanParams {
    double v = 1.0;
    double p = 0.0;
    double C = 0.0;
};
/// alpha = 1, p = -v^2/2: f = -v / (theta + C), or f = 0 on the zero branch.
struct RationalParams {
    double v = 1.0;
    double C = 1.0;
    bool zero_branch = false;
};
/// alpha = 1, v^2 + 2p < 0, k = sqrt(-(v^2 + 2p)):
/// f = 2k / (1 + C exp(2k theta / v)) - k. C = +-inf gives the constant -k;
/// branch = +1 / -1 selects the constant branches f = +k / -k directly.
struct TanhParams {
    double v = 1.0;
    double p = -1.0;
    double C = 1.0;
    int branch = 0;
};
/// alpha != 1, p = 0: v = C1 cos^(1-alpha)(theta + C2), f = C1 cos^(-alpha)(theta + C2) sin(theta + C2).
struct CosPowerParams {
    double alpha = 2.0;
    double C1 = 1.0;
    double C2 = 0.0;
};
/// alpha != 1, p < 0: v = sqrt(-2p) sin((1-alpha) theta + C), f = -sqrt(-2p) cos((1-alpha) theta + C).
struct SinParams {
    double alpha = 2.0;
    double p = -0.5;
    double C = 0.0;
};
/// alpha >= 1: v = c, f = 0, p = -c^2 / (2 alpha).
struct PureRotationParams {
    double alpha = 1.0;
    double c = 1.0;
};

using FamilyParams = std::variant<RadialAlpha1Params, TanParams, RationalParams, TanhParams, CosPowerParams,
                                  SinParams, PureRotationParams>;

inline FamilyKind kind_of(const FamilyParams& params) { return static_cast<FamilyKind>(params.index()); }

/// Open theta-interval on which the profile is finite.
struct Validity {
    double lo = -kInf;
    double hi = kInf;
    bool contains(double theta) const noexcept { return theta > lo && theta < hi; }
};

/// Poles closer than this to [0, theta0] count as inside.
inline constexpr double kPoleMargin = 1e-6;

namespace detail {

inline bool is_integer(double x) { return std::floor(x) == x; }

/// For arg(theta) = arg0 + slope * theta with poles at arg = pi/2 + m pi,
/// returns the pole-free interval around [0, theta0] or throws.
inline Validity tan_pole_guard(double arg0, double slope, double theta0, const char* what) {
    const double pi = std::numbers::pi;
    auto pole_theta = [&](double m) { return (pi / 2 + m * pi - arg0) / slope; };
    const double a_lo = std::min(arg0 + slope * (-kPoleMargin), arg0 + slope * (theta0 + kPoleMargin));
    const double a_hi = std::max(arg0 + slope * (-kPoleMargin), arg0 + slope * (theta0 + kPoleMargin));
    const double m_first = std::ceil((a_lo - pi / 2) / pi);
    if (pi / 2 + m_first * pi <= a_hi) {
        // Report the pole closest to theta = 0 among those inside.
        const double m_last = std::floor((a_hi - pi / 2) / pi);
        double t1 = pole_theta(m_first), t2 = pole_theta(m_last);
        const double t = std::abs(t1) <= std::abs(t2) ? t1 : t2;
        throw LocatedError(ErrorKind::SingularityInRange,
                           std::string(what) + " has a pole at theta=" + io::format_double(t), t);
    }
    const double below = pole_theta(m_first - 1);
    const double above = pole_theta(m_first);
    return Validity{std::min(below, above), std::max(below, above)};
}

}  // namespace detail

/// Velocity/pressure sample u_r, u_theta, P.
struct FlowSample {
    double u_r = 0.0;
    double u_theta = 0.0;
    double P = 0.0;
};

/// A constructed family instance: closed-form v, f, their derivatives, and the
/// stream function psi = h(theta) r^(1-alpha) (alpha != 1) or c ln r + h(theta)
/// (alpha = 1, h(0) = 0).
class HomogeneousSolution {
public:
    FamilyKind kind() const noexcept { return kind_of(params_); }
    const FamilyParams& params() const noexcept { return params_; }
    double alpha() const noexcept { return alpha_; }
    double p() const noexcept { return p_; }
    double theta0() const noexcept { return theta0_; }
    const Validity& validity() const noexcept { return validity_; }
    /// Swirl constant for alpha = 1 families (v is constant there).
    double swirl() const { return v(0.0); }

    double v(double th) const {
        return std::visit([&](const auto& q) { return v_impl(q, th); }, params_);
    }
    double f(double th) const {
        return std::visit([&](const auto& q) { return f_impl(q, th); }, params_);
    }
    /// Closed-form v' (differentiated from v directly, not through the profile equations).
    double dv(double th) const {
        return std::visit([&](const auto& q) { return dv_impl(q, th); }, params_);
    }
    double df(double th) const {
        return std::visit([&](const auto& q) { return df_impl(q, th); }, params_);
    }
    /// Angular part of the stream function.
    double h(double th) const {
        if (alpha_ != 1.0) return v(th) / (1.0 - alpha_);
        return std::visit([&](const auto& q) { return h1_impl(q, th); }, params_);
    }

    FlowSample eval(double r, double th) const {
        check_point(r, th);
        const double ra = std::pow(r, -alpha_);
        return {f(th) * ra, v(th) * ra, p_ * ra * ra};
    }

    double stream(double r, double th) const {
        check_point(r, th);
        if (alpha_ == 1.0) return swirl() * std::log(r) + h(th);
        return h(th) * std::pow(r, 1.0 - alpha_);
    }

    /// Closed-form Laplacian of the stream function (the vorticity).
    double stream_laplacian(double r, double th) const {
        check_point(r, th);
        if (alpha_ == 1.0) return -df(th) / (r * r);
        const double k = 1.0 - alpha_;
        return std::pow(r, -1.0 - alpha_) * (k * k * h(th) - df(th));
    }

    /// Short "key=value;..." description of the family constants.
    std::string describe() const {
        using io::format_double;
        return std::visit(
            [](const auto& q) -> std::string {
                using T = std::decay_t<decltype(q)>;
                if constexpr (std::is_same_v<T, RadialAlpha1Params>)
                    return "p=" + format_double(q.p) + ";sign=" + std::to_string(q.sign);
                else if constexpr (std::is_same_v<T, TanParams>)
                    return "v=" + format_double(q.v) + ";p=" + format_double(q.p) + ";C=" + format_double(q.C);
                else if constexpr (std::is_same_v<T, RationalParams>)
                    return "v=" + format_double(q.v) + ";C=" + format_double(q.C) +
                           ";zero_branch=" + (q.zero_branch ? "1" : "0");
                else if constexpr (std::is_same_v<T, TanhParams>)
                    return "v=" + format_double(q.v) + ";p=" + format_double(q.p) + ";C=" + format_double(q.C) +
                           ";branch=" + std::to_string(q.branch);
                else if constexpr (std::is_same_v<T, CosPowerParams>)
                    return "alpha=" + format_double(q.alpha) + ";C1=" + format_double(q.C1) +
                           ";C2=" + format_double(q.C2);
                else if constexpr (std::is_same_v<T, SinParams>)
                    return "alpha=" + format_double(q.alpha) + ";p=" + format_double(q.p) +
                           ";C=" + format_double(q.C);
                else
                    return "alpha=" + format_double(q.alpha) + ";c=" + format_double(q.c);
            },
            params_);
    }

    friend HomogeneousSolution construct_exact(const FamilyParams&, double);

private:
    HomogeneousSolution(FamilyParams params, double alpha, double p, double theta0, Validity validity)
        : params_(params), alpha_(alpha), p_(p), theta0_(theta0), validity_(validity) {}

    void check_point(double r, double th) const {
        if (!(r > 0.0)) throw Error(ErrorKind::OutOfValidity, "radius must be positive");
        if (!validity_.contains(th)) {
            throw LocatedError(ErrorKind::OutOfValidity, "theta=" + io::format_double(th) + " outside validity", th);
        }
    }

    // v
    static double v_impl(const RadialAlpha1Params&, double) { return 0.0; }
    static double v_impl(const TanParams& q, double) { return q.v; }
    static double v_impl(const RationalParams& q, double) { return q.v; }
    static double v_impl(const TanhParams& q, double) { return q.v; }
    static double v_impl(const CosPowerParams& q, double th) {
        return q.C1 * std::pow(std::cos(th + q.C2), 1.0 - q.alpha);
    }
    static double v_impl(const SinParams& q, double th) {
        return std::sqrt(-2.0 * q.p) * std::sin((1.0 - q.alpha) * th + q.C);
    }
    static double v_impl(const PureRotationParams& q, double) { return q.c; }

    // f
    static double f_impl(const RadialAlpha1Params& q, double) { return q.sign * std::sqrt(-2.0 * q.p); }
    static double f_impl(const TanParams& q, double th) {
        const double k = std::sqrt(q.v * q.v + 2.0 * q.p);
        return k * std::tan(k * th / q.v + q.C);
    }
    static double f_impl(const RationalParams& q, double th) { return q.zero_branch ? 0.0 : -q.v / (th + q.C); }
    static double f_impl(const TanhParams& q, double th) {
        const double k = std::sqrt(-(q.v * q.v + 2.0 * q.p));
        if (q.branch != 0) return q.branch * k;
        if (std::isinf(q.C)) return -k;
        return 2.0 * k / (1.0 + q.C * std::exp(2.0 * k * th / q.v)) - k;
    }
    static double f_impl(const CosPowerParams& q, double th) {
        const double x = th + q.C2;
        return q.C1 * std::pow(std::cos(x), -q.alpha) * std::sin(x);
    }
    static double f_impl(const SinParams& q, double th) {
        return -std::sqrt(-2.0 * q.p) * std::cos((1.0 - q.alpha) * th + q.C);
    }
    static double f_impl(const PureRotationParams&, double) { return 0.0; }

    // v'
    template <class Q>
    static double dv_impl(const Q&, double) { return 0.0; }
    static double dv_impl(const CosPowerParams& q, double th) {
        const double x = th + q.C2;
        return q.C1 * (q.alpha - 1.0) * std::pow(std::cos(x), -q.alpha) * std::sin(x);
    }
    static double dv_impl(const SinParams& q, double th) {
        return std::sqrt(-2.0 * q.p) * (1.0 - q.alpha) * std::cos((1.0 - q.alpha) * th + q.C);
    }

    // f'
    static double df_impl(const RadialAlpha1Params&, double) { return 0.0; }
    static double df_impl(const TanParams& q, double th) {
        const double k = std::sqrt(q.v * q.v + 2.0 * q.p);
        const double c = std::cos(k * th / q.v + q.C);
        return k * k / (q.v * c * c);
    }
    static double df_impl(const RationalParams& q, double th) {
        if (q.zero_branch) return 0.0;
        const double d = th + q.C;
        return q.v / (d * d);
    }
    static double df_impl(const TanhParams& q, double th) {
        if (q.branch != 0 || std::isinf(q.C)) return 0.0;
        const double k = std::sqrt(-(q.v * q.v + 2.0 * q.p));
        const double e = q.C * std::exp(2.0 * k * th / q.v);
        const double d = 1.0 + e;
        return -2.0 * k * (2.0 * k / q.v) * e / (d * d);
    }
    static double df_impl(const CosPowerParams& q, double th) {
        const double x = th + q.C2;
        const double c = std::cos(x), s = std::sin(x);
        return q.C1 * std::pow(c, -q.alpha - 1.0) * (q.alpha * s * s + c * c);
    }
    static double df_impl(const SinParams& q, double th) {
        return std::sqrt(-2.0 * q.p) * (1.0 - q.alpha) * std::sin((1.0 - q.alpha) * th + q.C);
    }
    static double df_impl(const PureRotationParams&, double) { return 0.0; }

    // h for alpha = 1 families: h(theta) = -int_0^theta f.
    static double h1_impl(const RadialAlpha1Params& q, double th) { return -f_impl(q, th) * th; }
    static double h1_impl(const TanParams& q, double th) {
        const double k = std::sqrt(q.v * q.v + 2.0 * q.p);
        return q.v * std::log(std::abs(std::cos(k * th / q.v + q.C) / std::cos(q.C)));
    }
    static double h1_impl(const RationalParams& q, double th) {
        if (q.zero_branch) return 0.0;
        return q.v * std::log(std::abs((th + q.C) / q.C));
    }
    static double h1_impl(const TanhParams& q, double th) {
        const double k = std::sqrt(-(q.v * q.v + 2.0 * q.p));
        if (q.branch != 0) return -q.branch * k * th;
        if (std::isinf(q.C)) return k * th;
        const double a = 2.0 * k / q.v;
        return -(k * th - q.v * std::log(std::abs((1.0 + q.C * std::exp(a * th)) / (1.0 + q.C))));
    }
    static double h1_impl(const CosPowerParams&, double) { return 0.0; }
    static double h1_impl(const SinParams&, double) { return 0.0; }
    static double h1_impl(const PureRotationParams&, double) { return 0.0; }

    FamilyParams params_;
    double alpha_;
    double p_;
    double theta0_;
    Validity validity_;
};

/// Builds a family instance attached to [0, theta0] after checking the branch
/// constraints and that no pole lies within kPoleMargin of the interval.
inline HomogeneousSolution construct_exact(const FamilyParams& params, double theta0) {
    if (!(theta0 > 0.0) || theta0 > kTwoPi) {
        throw Error(ErrorKind::InvalidAngle, "theta0 must lie in (0, 2*pi]");
    }
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::ParameterDomain, msg); };

    return std::visit(
        [&](const auto& q) -> HomogeneousSolution {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, RadialAlpha1Params>) {
                if (q.p > 0.0) fail("RadialAlpha1 requires p <= 0");
                if (q.sign != 1 && q.sign != -1) fail("RadialAlpha1 sign must be +1 or -1");
                return HomogeneousSolution(q, 1.0, q.p, theta0, {});
            } else if constexpr (std::is_same_v<T, TanParams>) {
                if (q.v == 0.0) fail("TanFamily requires v != 0");
                const double k2 = q.v * q.v + 2.0 * q.p;
                if (!(k2 > 0.0)) fail("TanFamily requires v^2 + 2p > 0");
                const double k = std::sqrt(k2);
                auto val = detail::tan_pole_guard(q.C, k / q.v, theta0, "TanFamily");
                return HomogeneousSolution(q, 1.0, q.p, theta0, val);
            } else if constexpr (std::is_same_v<T, RationalParams>) {
                if (q.v == 0.0) fail("RationalFamily requires v != 0");
                const double p = -q.v * q.v / 2.0;
                if (q.zero_branch) return HomogeneousSolution(q, 1.0, p, theta0, {});
                const double pole = -q.C;
                if (pole >= -kPoleMargin && pole <= theta0 + kPoleMargin) {
                    throw LocatedError(ErrorKind::SingularityInRange,
                                       "RationalFamily has a pole at theta=" + io::format_double(pole), pole);
                }
                Validity val = pole < 0.0 ? Validity{pole, kInf} : Validity{-kInf, pole};
                return HomogeneousSolution(q, 1.0, p, theta0, val);
            } else if constexpr (std::is_same_v<T, TanhParams>) {
                if (q.v == 0.0) fail("TanhFamily requires v != 0");
                const double k2 = q.v * q.v + 2.0 * q.p;
                if (!(k2 < 0.0)) fail("TanhFamily requires v^2 + 2p < 0");
                if (q.branch != 0 && q.branch != 1 && q.branch != -1) fail("TanhFamily branch must be -1, 0 or +1");
                if (q.branch == 0 && q.C == 0.0) fail("TanhFamily quotient branch requires C != 0");
                Validity val;
                if (q.branch == 0 && std::isfinite(q.C) && q.C < 0.0) {
                    const double k = std::sqrt(-k2);
                    const double pole = q.v / (2.0 * k) * std::log(-1.0 / q.C);
                    if (pole >= -kPoleMargin && pole <= theta0 + kPoleMargin) {
                        throw LocatedError(ErrorKind::SingularityInRange,
                                           "TanhFamily has a pole at theta=" + io::format_double(pole), pole);
                    }
                    val = pole < 0.0 ? Validity{pole, kInf} : Validity{-kInf, pole};
                }
                return HomogeneousSolution(q, 1.0, q.p, theta0, val);
            } else if constexpr (std::is_same_v<T, CosPowerParams>) {
                if (q.alpha == 1.0) fail("CosPowerFamily requires alpha != 1");
                if (q.C1 == 0.0) fail("CosPowerFamily requires C1 != 0");
                auto val = detail::tan_pole_guard(q.C2, 1.0, theta0, "CosPowerFamily");
                if (std::cos(0.5 * theta0 + q.C2) < 0.0 && !detail::is_integer(q.alpha)) {
                    fail("CosPowerFamily with non-integer alpha needs cos(theta + C2) > 0 on [0, theta0]");
                }
                return HomogeneousSolution(q, q.alpha, 0.0, theta0, val);
            } else if constexpr (std::is_same_v<T, SinParams>) {
                if (q.alpha == 1.0) fail("SinFamily requires alpha != 1");
                if (!(q.p < 0.0)) fail("SinFamily requires p < 0");
                return HomogeneousSolution(q, q.alpha, q.p, theta0, {});
            } else {
                if (!(q.alpha >= 1.0)) fail("PureRotation requires alpha >= 1");
                if (q.c == 0.0) fail("PureRotation requires c != 0");
                return HomogeneousSolution(q, q.alpha, -q.c * q.c / (2.0 * q.alpha), theta0, {});
            }
        },
        params);
}

/// Velocity components and pressure of a solution at (r, theta).
inline FlowSample eval_velocity_pressure(const HomogeneousSolution& sol, double r, double theta) {
    return sol.eval(r, theta);
}

/// Residuals of both profile equations evaluated with closed-form derivatives at
/// `samples` points of [0, theta0], each relative to max(1, size of its terms).
struct AnalyticResidual {
    double momentum = 0.0;
    double continuity = 0.0;
};

inline AnalyticResidual analytic_profile_residual(const HomogeneousSolution& sol, int samples = 1000) {
    AnalyticResidual out;
    const double a = sol.alpha(), p = sol.p();
    for (int k = 0; k < samples; ++k) {
        const double th = sol.theta0() * k / (samples - 1);
        const double v = sol.v(th), f = sol.f(th), df = sol.df(th), dv = sol.dv(th);
        const double t1 = v * df, t2 = a * f * f, t3 = v * v, t4 = 2.0 * a * p;
        const double s1 = std::max({1.0, std::abs(t1), std::abs(t2), std::abs(t3), std::abs(t4)});
        out.momentum = std::max(out.momentum, std::abs(t1 - t2 - t3 - t4) / s1);
        const double s2 = std::max({1.0, std::abs((1.0 - a) * f), std::abs(dv)});
        out.continuity = std::max(out.continuity, std::abs((1.0 - a) * f + dv) / s2);
    }
    return out;
}

/// Tabulated angular profile on a uniform theta grid.
struct AngularProfile {
    double alpha = 1.0;
    double p = 0.0;
    std::vector<double> theta;
    std::vector<double> v;
    std::vector<double> f;

    std::size_t size() const noexcept { return theta.size(); }
    double h_theta() const { return theta.size() > 1 ? theta[1] - theta[0] : 0.0; }
};

/// Samples v and f at n uniform nodes of [0, theta0].
inline AngularProfile tabulate(const HomogeneousSolution& sol, int n) {
    if (n < 2) throw Error(ErrorKind::InvalidGrid, "profile needs at least 2 nodes");
    AngularProfile prof{sol.alpha(), sol.p(), {}, {}, {}};
    prof.theta.resize(n);
    prof.v.resize(n);
    prof.f.resize(n);
    for (int k = 0; k < n; ++k) {
        const double th = sol.theta0() * (static_cast<double>(k) / (n - 1));
        prof.theta[k] = th;
        prof.v[k] = sol.v(th);
        prof.f[k] = sol.f(th);
    }
    return prof;
}

struct ProfileResidual {
    double momentum = 0.0;    ///< max |v f' - alpha f^2 - v^2 - 2 alpha p|
    double continuity = 0.0;  ///< max |(1 - alpha) f + v'|
    double h_theta = 0.0;
};

/// Discrete residuals of the profile system. Derivatives use fourth-order
/// central differences (one-sided of the same order at the two ends).
inline ProfileResidual profile_residual(const AngularProfile& prof) {
    const int n = static_cast<int>(prof.size());
    if (n < 9) throw Error(ErrorKind::InvalidGrid, "profile residual needs at least 9 nodes");
    if (prof.v.size() != prof.theta.size() || prof.f.size() != prof.theta.size()) {
        throw Error(ErrorKind::InvalidGrid, "profile arrays differ in length");
    }
    const double h = prof.h_theta();
    auto df = fd::differentiate(prof.f, h, 1, 4);
    auto dv = fd::differentiate(prof.v, h, 1, 4);
    ProfileResidual out{0.0, 0.0, h};
    const double a = prof.alpha;
    for (int k = 0; k < n; ++k) {
        const double v = prof.v[k], f = prof.f[k];
        out.momentum = std::max(out.momentum, std::abs(v * df[k] - a * f * f - v * v - 2.0 * a * prof.p));
        out.continuity = std::max(out.continuity, std::abs((1.0 - a) * f + dv[k]));
    }
    return out;
}

/// Writes a profile as CSV: one metadata comment row, then `theta,v,f`.
inline void write_profile_csv(const std::filesystem::path& path, const AngularProfile& prof,
                              std::string_view kind = "tabulated", std::string_view params = "") {
    auto out = io::open_for_write(path);
    out << "# alpha=" << io::format_double(prof.alpha) << ",p=" << io::format_double(prof.p) << ",kind=" << kind
        << ",params=" << params << "\n";
    out << "theta,v,f\n";
    for (std::size_t k = 0; k < prof.size(); ++k) {
        out << io::format_double(prof.theta[k]) << ',' << io::format_double(prof.v[k]) << ','
            << io::format_double(prof.f[k]) << '\n';
    }
}

}  // namespace heuler
