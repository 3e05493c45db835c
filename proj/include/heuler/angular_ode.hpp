#pragma once

/// @file angular_ode.hpp
/// @brief Fixed-step RK4 integration of the angular profile equations and the
/// periodic-shooting classification of alpha = 1 profiles.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "heuler/error.hpp"
#include "heuler/exact_solutions.hpp"

namespace heuler {

struct OdeConfig {
    double step = 1e-3;
    double max_f = 1e8;  ///< blow-up guard on |f|

    void validate() const {
        if (!(step > 0.0 && step <= 0.1)) throw Error(ErrorKind::ParameterDomain, "ODE step must lie in (0, 0.1]");
        if (!(max_f > 0.0)) throw Error(ErrorKind::ParameterDomain, "max_f must be positive");
    }
};

enum class OdeStatus { Completed, BlowUp, SingularSwirl };

constexpr std::string_view to_string(OdeStatus s) {
    switch (s) {
        case OdeStatus::Completed: return "Completed";
        case OdeStatus::BlowUp: return "BlowUp";
        case OdeStatus::SingularSwirl: return "SingularSwirl";
    }
    return "?";
}

/// Integration output. On early stop `profile` holds the nodes computed before
/// the stop, and `stop_theta` the estimated pole (BlowUp) or the last node
/// before |v| fell under the floor (SingularSwirl).
struct OdeRun {
    AngularProfile profile;
    OdeStatus status = OdeStatus::Completed;
    std::optional<double> stop_theta;

    bool completed() const noexcept { return status == OdeStatus::Completed; }
};

namespace detail {

/// Uniform node count so that the span is covered by steps no longer than `step`.
inline int step_count(double span, double step) {
    const double q = span / step;
    const double n = std::round(q);
    if (std::abs(q - n) <= 1e-9 * std::max(1.0, q)) return std::max(1, static_cast<int>(n));
    return std::max(1, static_cast<int>(std::ceil(q)));
}

/// Zero of the line through (t0, 1/f0), (t1, 1/f1).
inline double pole_by_inverse_extrapolation(double t0, double f0, double t1, double f1) {
    const double g0 = 1.0 / f0, g1 = 1.0 / f1;
    if (g0 == g1) return t1;
    return t1 - g1 * (t1 - t0) / (g1 - g0);
}

}  // namespace detail

/// alpha = 1: v = c constant and c f' = f^2 + c^2 + 2p, from f(theta_a) = f0.
inline OdeRun integrate_alpha1(double c, double p, double f0, std::pair<double, double> span,
                               const OdeConfig& cfg = {}) {
    cfg.validate();
    if (c == 0.0) throw Error(ErrorKind::ZeroSwirl, "c = 0 makes the profile equation algebraic");
    const auto [ta, tb] = span;
    if (!(tb > ta)) throw Error(ErrorKind::ParameterDomain, "theta span must be increasing");
    const int n = detail::step_count(tb - ta, cfg.step);
    const double h = (tb - ta) / n;
    const double q = c * c + 2.0 * p;
    auto rhs = [&](double f) { return (f * f + q) / c; };

    OdeRun run;
    run.profile.alpha = 1.0;
    run.profile.p = p;
    run.profile.theta.push_back(ta);
    run.profile.v.push_back(c);
    run.profile.f.push_back(f0);
    double f = f0;
    for (int k = 1; k <= n; ++k) {
        const double k1 = rhs(f);
        const double k2 = rhs(f + 0.5 * h * k1);
        const double k3 = rhs(f + 0.5 * h * k2);
        const double k4 = rhs(f + h * k3);
        const double next = f + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double th = std::lerp(ta, tb, static_cast<double>(k) / n);
        if (!std::isfinite(next) || std::abs(next) > cfg.max_f || std::abs(next - f) > std::max(1.0, std::abs(f))) {
            run.status = OdeStatus::BlowUp;
            const auto& ts = run.profile.theta;
            const auto& fs = run.profile.f;
            if (fs.size() >= 2) {
                run.stop_theta = detail::pole_by_inverse_extrapolation(ts[ts.size() - 2], fs[fs.size() - 2],
                                                                       ts.back(), fs.back());
            } else {
                run.stop_theta = th;
            }
            return run;
        }
        f = next;
        run.profile.theta.push_back(th);
        run.profile.v.push_back(c);
        run.profile.f.push_back(f);
    }
    return run;
}

/// alpha != 1: v' = (alpha - 1) f, f' = (alpha f^2 + v^2 + 2 alpha p) / v.
/// Stops when |v| drops below 1e-8 * max(|v0|, 1) or changes sign, since the system divides by v.
inline OdeRun integrate_general(double alpha, double p, double v0, double f0, std::pair<double, double> span,
                                const OdeConfig& cfg = {}) {
    cfg.validate();
    if (alpha == 1.0) throw Error(ErrorKind::ParameterDomain, "use integrate_alpha1 for alpha = 1");
    const auto [ta, tb] = span;
    if (!(tb > ta)) throw Error(ErrorKind::ParameterDomain, "theta span must be increasing");
    const double v_floor = 1e-8 * std::max(std::abs(v0), 1.0);
    if (std::abs(v0) < v_floor) {
        throw LocatedError(ErrorKind::SingularSwirl, "initial swirl v0 vanishes", ta);
    }
    const int n = detail::step_count(tb - ta, cfg.step);
    const double h = (tb - ta) / n;
    using State = std::array<double, 2>;
    auto rhs = [&](const State& y) -> State {
        return {(alpha - 1.0) * y[1], (alpha * y[1] * y[1] + y[0] * y[0] + 2.0 * alpha * p) / y[0]};
    };
    auto axpy = [](const State& y, double a, const State& k) -> State { return {y[0] + a * k[0], y[1] + a * k[1]}; };

    OdeRun run;
    run.profile.alpha = alpha;
    run.profile.p = p;
    run.profile.theta.push_back(ta);
    run.profile.v.push_back(v0);
    run.profile.f.push_back(f0);
    State y{v0, f0};
    for (int k = 1; k <= n; ++k) {
        const State k1 = rhs(y);
        const State k2 = rhs(axpy(y, 0.5 * h, k1));
        const State k3 = rhs(axpy(y, 0.5 * h, k2));
        const State k4 = rhs(axpy(y, h, k3));
        State next{y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                   y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
        const double th = std::lerp(ta, tb, static_cast<double>(k) / n);
        const bool finite = std::isfinite(next[0]) && std::isfinite(next[1]);
        if (finite && (std::abs(next[0]) < v_floor || std::signbit(next[0]) != std::signbit(y[0]))) {
            run.status = OdeStatus::SingularSwirl;
            run.stop_theta = run.profile.theta.back();
            return run;
        }
        if (!finite || std::abs(next[1]) > cfg.max_f || std::abs(next[1] - y[1]) > std::max(1.0, std::abs(y[1]))) {
            run.status = OdeStatus::BlowUp;
            const auto& ts = run.profile.theta;
            const auto& fs = run.profile.f;
            run.stop_theta = fs.size() >= 2 ? detail::pole_by_inverse_extrapolation(ts[ts.size() - 2], fs[fs.size() - 2],
                                                                                    ts.back(), fs.back())
                                            : th;
            return run;
        }
        y = next;
        run.profile.theta.push_back(th);
        run.profile.v.push_back(y[0]);
        run.profile.f.push_back(y[1]);
    }
    return run;
}

/// max |w'' - lambda w| / max |w| along an alpha = 1 profile, where
/// w = exp(-int_0^theta f / c) and lambda = -(c^2 + 2p) / c^2. The integral uses
/// the trapezoid rule and w'' a central second difference, so the value is O(step^2).
inline double w_equation_residual(const AngularProfile& prof) {
    const std::size_t n = prof.size();
    if (n < 3) throw Error(ErrorKind::InvalidGrid, "need at least 3 profile nodes");
    const double c = prof.v.front();
    if (c == 0.0) throw Error(ErrorKind::ZeroSwirl, "w-substitution needs c != 0");
    const double lambda = -(c * c + 2.0 * prof.p) / (c * c);
    std::vector<double> w(n);
    double integral = 0.0;
    w[0] = 1.0;
    for (std::size_t k = 1; k < n; ++k) {
        integral += 0.5 * (prof.theta[k] - prof.theta[k - 1]) * (prof.f[k] + prof.f[k - 1]);
        w[k] = std::exp(-integral / c);
    }
    double res = 0.0, wmax = 0.0;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double h = prof.theta[k + 1] - prof.theta[k];
        const double w2 = (w[k + 1] - 2.0 * w[k] + w[k - 1]) / (h * h);
        res = std::max(res, std::abs(w2 - lambda * w[k]));
        wmax = std::max(wmax, std::abs(w[k]));
    }
    return res / wmax;
}

/// max_k |v(theta_k) - v(theta_0) - (alpha - 1) int_0^theta_k f| with trapezoid quadrature.
inline double mass_identity_defect(const AngularProfile& prof) {
    double integral = 0.0, defect = 0.0;
    for (std::size_t k = 1; k < prof.size(); ++k) {
        integral += 0.5 * (prof.theta[k] - prof.theta[k - 1]) * (prof.f[k] + prof.f[k - 1]);
        defect = std::max(defect, std::abs(prof.v[k] - prof.v[0] - (prof.alpha - 1.0) * integral));
    }
    return defect;
}

struct ShootingMember {
    double f0 = 0.0;
    double defect = 0.0;  ///< |f(2 pi) - f(0)|, +inf after blow-up
    std::optional<double> blowup_theta;
    bool is_periodic = false;
    double f_range = 0.0;  ///< max - min of f over the computed span
};

struct ShootingReport {
    double c = 0.0;
    double p = 0.0;
    double lambda = 0.0;  ///< -(c^2 + 2p) / c^2
    std::vector<ShootingMember> members;
    int periodic_count = 0;
    /// Every periodic member is constant with f^2 = -(c^2 + 2p).
    bool periodic_members_constant = true;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["c"] = c;
        j["p"] = p;
        j["lambda"] = lambda;
        j["periodic_count"] = periodic_count;
        j["periodic_members_constant"] = periodic_members_constant;
        auto& arr = j["members"] = nlohmann::json::array();
        for (const auto& m : members) {
            nlohmann::json e;
            e["f0"] = m.f0;
            e["defect"] = std::isfinite(m.defect) ? nlohmann::json(m.defect) : nlohmann::json("inf");
            e["blowup_theta"] = m.blowup_theta ? nlohmann::json(*m.blowup_theta) : nlohmann::json(nullptr);
            e["is_periodic"] = m.is_periodic;
            e["f_range"] = m.f_range;
            arr.push_back(std::move(e));
        }
        return j;
    }
};

inline constexpr double kPeriodicDefectTol = 1e-9;

/// Integrates c f' = f^2 + c^2 + 2p over [0, 2 pi] from every f0 and classifies
/// the 2 pi-periodic members.
inline ShootingReport periodic_shooting(double c, double p, const std::vector<double>& f0_grid,
                                        const OdeConfig& cfg = {}) {
    if (c == 0.0) throw Error(ErrorKind::ZeroSwirl, "periodic shooting needs c != 0");
    ShootingReport rep;
    rep.c = c;
    rep.p = p;
    rep.lambda = -(c * c + 2.0 * p) / (c * c);
    const double d2 = -(c * c + 2.0 * p);
    for (double f0 : f0_grid) {
        ShootingMember m;
        m.f0 = f0;
        auto run = integrate_alpha1(c, p, f0, {0.0, kTwoPi}, cfg);
        const auto [lo, hi] = std::minmax_element(run.profile.f.begin(), run.profile.f.end());
        m.f_range = *hi - *lo;
        if (!run.completed()) {
            m.defect = kInf;
            m.blowup_theta = run.stop_theta;
        } else {
            m.defect = std::abs(run.profile.f.back() - run.profile.f.front());
            m.is_periodic = m.defect < kPeriodicDefectTol;
        }
        if (m.is_periodic) {
            ++rep.periodic_count;
            const bool constant = m.f_range < kPeriodicDefectTol && std::abs(f0 * f0 - d2) < kPeriodicDefectTol;
            rep.periodic_members_constant = rep.periodic_members_constant && constant;
        }
        rep.members.push_back(m);
    }
    return rep;
}

/// n values lo, ..., hi; the endpoints and exact binary fractions in between are hit exactly.
inline std::vector<double> uniform_values(double lo, double hi, int n) {
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k) out[k] = n == 1 ? lo : lo + ((hi - lo) * k) / (n - 1);
    return out;
}

}  // namespace heuler
