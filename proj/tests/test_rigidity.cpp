#include <cmath>

#include <gtest/gtest.h>

#include "heuler/rigidity.hpp"
#include "oracles.hpp"

using namespace heuler;

namespace {

LogPolarGrid sector(int n, double theta0, double a = 1.0, double b = 2.0) {
    return build_grid(make_sector(a, b, theta0), n, n);
}

GRecovery table(double lo, double hi, int n, const std::function<double(double)>& g) {
    GRecovery rec;
    for (int k = 0; k < n; ++k) {
        const double z = lo + (hi - lo) * k / (n - 1);
        rec.z.push_back(z);
        rec.g.push_back(g(z));
    }
    return rec;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::PipelineFailure;
}

}  // namespace

TEST(Homogeneity, PureRotationIsExact) {
    const auto g = sector(32, 1.0);
    const auto fit = homogeneity_fit(sample_velocity(g, construct_exact(PureRotationParams{2.0, 3.0}, 1.0)));
    EXPECT_NEAR(fit.alpha_hat, 2.0, 1e-10);
    EXPECT_LE(fit.deviation, 1e-10);
    EXPECT_EQ(fit.rays_used, 33);
}

TEST(Homogeneity, TanFamilyHasDegreeOne) {
    const auto g = sector(32, 1.0);
    const auto fit = homogeneity_fit(sample_velocity(g, construct_exact(TanParams{1.0, 0.0, 0.0}, 1.0)));
    EXPECT_NEAR(fit.alpha_hat, 1.0, 1e-10);
}

TEST(Homogeneity, MixtureOfDegreesIsFlagged) {
    const auto g = sector(32, 1.0);
    VectorField u(g);
    for (int i = 0; i <= g.n_s(); ++i) {
        for (int j = 0; j <= g.n_theta(); ++j) u.utheta[g.index(i, j)] = 1.0 / g.r(i) + 1.0 / (g.r(i) * g.r(i));
    }
    EXPECT_GT(homogeneity_fit(u).deviation, 0.01);
    EXPECT_EQ(kind_of([&] { (void)homogeneity_fit(VectorField(g)); }), ErrorKind::DegenerateField);
}

TEST(RecoverG, CosPowerGivesCubic) {
    const auto g = sector(128, 1.0);
    const auto psi = sample(g, oracle::cos_power_stream);
    const auto rec = recover_g(psi, laplacian_polar(psi));
    EXPECT_LT(rec.single_valued_defect, kFitDefectThreshold);
    ASSERT_TRUE(rec.fit.has_value());
    EXPECT_EQ(rec.fit->form, "PowerForm");
    EXPECT_NEAR(rec.fit->exponent, 3.0, 0.05);
    EXPECT_NEAR(rec.fit->coefficient, 2.0, 0.04);
    for (std::size_t k = 1; k < rec.z.size(); ++k) EXPECT_GT(rec.z[k], rec.z[k - 1]);
}

TEST(RecoverG, TanStreamGivesExponential) {
    const auto g = sector(128, 1.0);
    const auto psi = sample(g, oracle::tan_stream);
    const auto rec = recover_g(psi, laplacian_polar(psi));
    ASSERT_TRUE(rec.fit.has_value());
    EXPECT_EQ(rec.fit->form, "ExpForm");
    EXPECT_NEAR(rec.fit->exponent, -2.0, 0.02);
    EXPECT_NEAR(rec.fit->coefficient, -1.0, 0.02);
}

TEST(RecoverG, UnrelatedFieldsAreNotSingleValued) {
    const auto g = sector(64, 1.0);
    const auto psi = sample(g, [](double s, double) { return s; });
    const auto lap = sample(g, [](double, double th) { return th; });
    const auto rec = recover_g(psi, lap);
    EXPECT_GT(rec.single_valued_defect, kFitDefectThreshold);
    EXPECT_FALSE(rec.fit.has_value());
}

TEST(RecoverG, WritesCsv) {
    const auto path = std::filesystem::temp_directory_path() / "heuler_g.csv";
    table(0.0, 1.0, 3, [](double z) { return z; }).write_csv(path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "z,g");
    std::getline(in, line);
    EXPECT_EQ(line, "0,0");
    std::filesystem::remove(path);
}

TEST(FunctionalCheck, ExpFormSatisfiesScaling) {
    const auto rec = table(-1.0, 2.0, 3001, [](double z) { return -std::exp(-2.0 * z); });
    const auto d = g_functional_check(rec, Thm1Relation{1.0});
    EXPECT_LE(d.defect, 1e-5);
    EXPECT_GT(d.points, 1000);
}

TEST(FunctionalCheck, CubicSatisfiesScaling) {
    const auto rec = table(-1.0, 1.0, 2001, [](double z) { return 2.0 * z * z * z; });
    EXPECT_LE(g_functional_check(rec, Thm2Relation{2.0}).defect, 1e-5);
}

TEST(FunctionalCheck, LinearFailsScaling) {
    const auto rec = table(-1.0, 1.0, 201, [](double z) { return z; });
    EXPECT_NEAR(g_functional_check(rec, Thm2Relation{2.0}).defect, 0.75, 1e-12);
}

TEST(FunctionalCheck, DisjointImageIsInsufficientOverlap) {
    const auto rec = table(0.0, 1.0, 101, [](double z) { return z; });
    EXPECT_EQ(kind_of([&] { (void)g_functional_check(rec, Thm1Relation{10.0}); }), ErrorKind::InsufficientOverlap);
}

TEST(Jacobian, ExactStreamIsFunctionallyDependent) {
    const auto g = sector(256, 1.0);
    const auto psi = sample(g, oracle::cos_power_stream);
    EXPECT_LE(jacobian_check(laplacian_polar(psi), psi).normalized_max, 1e-4);
}

TEST(Jacobian, IndependentFieldsAreOrthogonal) {
    const auto g = sector(32, 1.0);
    const auto psi = sample(g, [](double, double th) { return th; });
    const auto lap = sample(g, [](double s, double) { return s; });
    EXPECT_NEAR(jacobian_check(lap, psi).normalized_max, 1.0, 1e-9);
}

TEST(Jacobian, FunctionOfPsiVanishes) {
    const auto g = sector(32, 1.0);
    const auto psi = sample(g, [](double s, double th) { return s + th; });
    const auto lap = sample(g, [](double s, double th) { return (s + th) * (s + th); });
    const auto rep = jacobian_check(lap, psi);
    EXPECT_LE(rep.normalized_max, 1e-12);
    EXPECT_EQ(rep.nodes, 31 * 31);
}

TEST(Jacobian, HarmonicStreamHasUnresolvedLaplacian) {
    const auto g = sector(256, oracle::pi / 2);
    const auto psi = sample(g, [](double s, double th) { return -std::cos(th) * std::exp(-s); });
    const auto rep = jacobian_check(laplacian_polar(psi), psi);
    EXPECT_FALSE(rep.laplacian_resolved);
    EXPECT_EQ(rep.normalized_max, 0.0);
    EXPECT_TRUE(jacobian_check(laplacian_polar(sample(g, oracle::tan_stream)), sample(g, oracle::tan_stream))
                    .laplacian_resolved);
}

TEST(LevelSet, LinearThetaIsGraphOverR) {
    const auto g = sector(32, 1.0);
    const auto res = level_set_check(sample(g, [](double, double th) { return th; }), 0.5, Orientation::OverR);
    EXPECT_TRUE(res.is_graph);
    EXPECT_EQ(res.span_lo, 0);
    EXPECT_EQ(res.span_hi, 32);
    for (const auto& [s, th] : res.curve) EXPECT_NEAR(th, 0.5, 1e-14);
}

TEST(LevelSet, TanStreamZeroLevelMatchesArccos) {
    const auto g = sector(64, 1.0);
    const auto res = level_set_check(sample(g, oracle::tan_stream), 0.0, Orientation::OverR);
    EXPECT_TRUE(res.is_graph);
    ASSERT_FALSE(res.curve.empty());
    for (const auto& [s, th] : res.curve) EXPECT_NEAR(th, std::acos(std::exp(-s)), 1e-3);
}

TEST(LevelSet, SignChangeIsMonotonicityViolation) {
    const auto g = sector(32, 1.0, 0.5, 2.0);
    const auto psi = sample(g, [](double s, double th) { return std::sin(s) * th; });
    EXPECT_EQ(kind_of([&] { (void)level_set_check(psi, 0.1, Orientation::OverR); }), ErrorKind::MonotonicityViolated);
    EXPECT_NO_THROW((void)level_set_check(psi, 0.1, Orientation::OverTheta));
}

TEST(Sliding, LinearThetaShiftsByTau) {
    const auto g = sector(32, 1.0);
    const auto res = sliding_check(sample(g, [](double, double th) { return th; }), {0.0, 1.0}, {0.1});
    EXPECT_NEAR(res.min_w, 0.1, 1e-12);
    ASSERT_EQ(res.per_tau_min.size(), 1u);
}

TEST(Sliding, SecantSpotValue) {
    const auto g = sector(100, 1.0);
    const auto res = sliding_check(sample(g, [](double, double th) { return oracle::sec(th); }), {0.0, 1.0}, {0.1});
    EXPECT_NEAR(res.min_w, oracle::sec_slide_spot, 1e-6);
    EXPECT_NEAR(res.min_w, 0.00502086, 1e-6);
    EXPECT_EQ(res.theta, 0.0);
}

TEST(Sliding, OscillatingFieldGoesNegative) {
    const auto g = sector(64, 1.0);
    const auto psi = sample(g, [](double, double th) { return std::sin(2 * oracle::pi * th); });
    EXPECT_LT(sliding_check(psi, {0.0, 1.0}, {0.1, 0.2, 0.3}).min_w, 0.0);
}

TEST(Sliding, Errors) {
    const auto g = sector(32, 1.0);
    const auto psi = sample(g, [](double, double th) { return th; });
    EXPECT_EQ(kind_of([&] { (void)sliding_check(psi, {0.0, 1.0}, {2.0}); }), ErrorKind::EmptyOverlap);
    EXPECT_EQ(kind_of([&] { (void)sliding_check(psi, {1.0, 0.0}, {0.1}); }), ErrorKind::ParameterDomain);
}

TEST(BoundaryReport, TanEdgeConstants) {
    const auto g = sector(64, 1.0);
    const auto rep = boundary_report(sample_velocity(g, construct_exact(TanParams{1.0, 0.0, 0.0}, 1.0)), 1.0);
    EXPECT_NEAR(rep.c1.value, 1.0, 1e-10);
    EXPECT_NEAR(rep.c2.value, 1.0, 1e-10);
    EXPECT_NEAR(rep.A.value, 1.0, 1e-8);
    EXPECT_LE(rep.A.residual, 1e-8);
    ASSERT_TRUE(rep.radial_ratio_defect.has_value());
    EXPECT_LE(*rep.radial_ratio_defect, 1e-8);
    EXPECT_FALSE(rep.inconsistent_hypotheses);
}

TEST(BoundaryReport, PureRotationMargin) {
    const auto g = sector(32, 1.0);
    const auto rep = boundary_report(sample_velocity(g, construct_exact(PureRotationParams{2.0, 3.0}, 1.0)), 2.0);
    ASSERT_TRUE(rep.rotation_margin.has_value());
    EXPECT_NEAR(*rep.rotation_margin, 3.0, 1e-10);
    EXPECT_FALSE(rep.f_sign_definite);
}

TEST(BoundaryReport, SinFamilyFluxAndMass) {
    const double theta0 = oracle::pi / 3;
    const auto g = sector(64, theta0);
    BoundaryOptions opt;
    opt.r0 = 1.0;
    const auto rep =
        boundary_report(sample_velocity(g, construct_exact(SinParams{2.0, -0.5, oracle::pi / 2}, theta0)), 2.0, opt);
    ASSERT_TRUE(rep.flux_value.has_value());
    EXPECT_NEAR(*rep.flux_value, -0.5, 1e-3);
    ASSERT_TRUE(rep.flux_margin.has_value());
    EXPECT_NEAR(*rep.flux_margin, 0.0, 1e-3);
    EXPECT_LE(rep.mass_identity_defect, 1e-3);
    EXPECT_FALSE(rep.f_sign_definite);
}

TEST(BoundaryReport, FullTurnWithDefiniteRadialFlowIsInconsistent) {
    const auto g = sector(32, 2 * oracle::pi);
    VectorField u(g);
    for (int i = 0; i <= g.n_s(); ++i) {
        for (int j = 0; j <= g.n_theta(); ++j) {
            u.ur[g.index(i, j)] = std::pow(g.r(i), -2.0);
            u.utheta[g.index(i, j)] = std::pow(g.r(i), -2.0);
        }
    }
    EXPECT_TRUE(boundary_report(u, 2.0).inconsistent_hypotheses);
    EXPECT_FALSE(boundary_report(u, 1.0).inconsistent_hypotheses);
}

TEST(BoundaryReport, FluxRowMustBeOnGrid) {
    const auto g = sector(32, 1.0);
    BoundaryOptions opt;
    opt.r0 = 1.3;
    const auto u = sample_velocity(g, construct_exact(TanParams{1.0, 0.0, 0.0}, 1.0));
    EXPECT_EQ(kind_of([&] { (void)boundary_report(u, 1.0, opt); }), ErrorKind::EdgeNotOnGrid);
}
