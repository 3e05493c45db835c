#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "heuler/exact_solutions.hpp"
#include "oracles.hpp"

using namespace heuler;

namespace {

ErrorKind construct_error(const FamilyParams& p, double theta0) {
    try {
        (void)construct_exact(p, theta0);
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected construct_exact to throw";
    return ErrorKind::PipelineFailure;
}

}  // namespace

TEST(ConstructExact, RadialFlowHasUnitProfile) {
    const auto sol = construct_exact(RadialAlpha1Params{-0.5, 1}, oracle::pi / 2);
    EXPECT_EQ(sol.alpha(), 1.0);
    for (double th : {0.0, 0.4, 1.5}) {
        EXPECT_EQ(sol.v(th), 0.0);
        EXPECT_DOUBLE_EQ(sol.f(th), 1.0);
    }
}

TEST(ConstructExact, TanFamilyMatchesTangent) {
    const auto sol = construct_exact(TanParams{1.0, 0.0, 0.0}, oracle::pi / 4);
    EXPECT_NEAR(sol.f(oracle::pi / 4), 1.0, 1e-15);
    for (double th : {0.1, 0.3, 0.7}) EXPECT_NEAR(sol.f(th), oracle::tan_profile(th), 1e-15);
    EXPECT_EQ(sol.v(0.3), 1.0);
}

TEST(ConstructExact, SinFamilyMatchesShiftedSine) {
    const double C = oracle::pi / 2;
    const auto sol = construct_exact(SinParams{2.0, -0.5, C}, oracle::pi / 2);
    for (double th : {0.0, 0.5, 1.2}) {
        EXPECT_NEAR(sol.v(th), std::cos(th), 1e-15);
        EXPECT_NEAR(sol.f(th), -std::sin(th), 1e-15);
    }
    const auto r = analytic_profile_residual(sol);
    EXPECT_LE(r.momentum, 1e-14);
    EXPECT_LE(r.continuity, 1e-14);
}

TEST(ConstructExact, TanPoleInsideWindowIsReportedWithLocation) {
    try {
        (void)construct_exact(TanParams{1.0, 0.0, 0.0}, 2.0);
        FAIL() << "expected SingularityInRange";
    } catch (const LocatedError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SingularityInRange);
        EXPECT_NEAR(e.theta(), oracle::pi / 2, 1e-12);
    }
}

TEST(ConstructExact, ParameterPreconditions) {
    EXPECT_EQ(construct_error(RadialAlpha1Params{0.5, 1}, 1.0), ErrorKind::ParameterDomain);
    EXPECT_EQ(construct_error(TanParams{0.0, 1.0, 0.0}, 1.0), ErrorKind::ParameterDomain);
    EXPECT_EQ(construct_error(TanParams{1.0, -1.0, 0.0}, 1.0), ErrorKind::ParameterDomain);
    EXPECT_EQ(construct_error(RationalParams{0.0, 1.0, false}, 1.0), ErrorKind::ParameterDomain);
    EXPECT_EQ(construct_error(TanhParams{1.0, 0.0, 1.0, 0}, 1.0), ErrorKind::ParameterDomain);
    EXPECT_EQ(construct_error(TanhParams{1.0, -1.0, 0.0, 0}, 1.0), ErrorKind::ParameterDomain);
    EXPECT_EQ(construct_error(CosPowerParams{1.0, 1.0, 0.0}, 1.0), ErrorKind::ParameterDomain);
    EXPECT_EQ(construct_error(SinParams{2.0, 0.5, 0.0}, 1.0), ErrorKind::ParameterDomain);
    EXPECT_EQ(construct_error(SinParams{1.0, -0.5, 0.0}, 1.0), ErrorKind::ParameterDomain);
    EXPECT_EQ(construct_error(PureRotationParams{0.5, 1.0}, 1.0), ErrorKind::ParameterDomain);
    EXPECT_EQ(construct_error(PureRotationParams{2.0, 0.0}, 1.0), ErrorKind::ParameterDomain);
}

TEST(ConstructExact, RationalAndTanhIdentities) {
    const auto rat = construct_exact(RationalParams{1.0, 1.0, false}, 1.0);
    EXPECT_DOUBLE_EQ(rat.p(), -0.5);
    const auto tnh = construct_exact(TanhParams{1.0, -1.0, 1.0, 0}, 1.0);
    const auto r = analytic_profile_residual(tnh);
    EXPECT_LE(std::max(r.momentum, r.continuity), 1e-10);
    const auto flat = construct_exact(TanhParams{1.0, -1.0, 1.0, 1}, 1.0);
    for (double th : {0.0, 0.5, 1.0}) EXPECT_NEAR(flat.f(th) * flat.f(th), 1.0, 1e-14);
}

TEST(ConstructExact, CatalogueResidualsAreAnalyticallyZero) {
    const std::pair<FamilyParams, double> cases[] = {
        {RadialAlpha1Params{-0.5, 1}, oracle::pi / 2}, {TanParams{1.0, 0.0, 0.0}, oracle::pi / 4},
        {RationalParams{1.0, 1.0, false}, 1.0},        {TanhParams{1.0, -1.0, 1.0, 0}, 1.0},
        {CosPowerParams{2.0, 1.0, 0.0}, 1.0},          {SinParams{2.0, -0.5, oracle::pi / 2}, oracle::pi / 2},
        {PureRotationParams{2.0, 3.0}, oracle::pi}};
    for (const auto& [params, theta0] : cases) {
        const auto sol = construct_exact(params, theta0);
        const auto r = analytic_profile_residual(sol);
        EXPECT_LE(r.momentum, 1e-10) << sol.describe();
        EXPECT_LE(r.continuity, 1e-10) << sol.describe();
        EXPECT_NEAR(sol.dv(0.3 * theta0), (1.0 - sol.alpha()) * -sol.f(0.3 * theta0), 1e-12) << sol.describe();
    }
}

TEST(EvalVelocityPressure, SpecExamples) {
    const auto rad = construct_exact(RadialAlpha1Params{-0.5, 1}, 1.0);
    const auto a = eval_velocity_pressure(rad, 2.0, 0.7);
    EXPECT_DOUBLE_EQ(a.u_r, 0.5);
    EXPECT_EQ(a.u_theta, 0.0);
    EXPECT_DOUBLE_EQ(a.P, oracle::radial_pressure(2.0));

    const auto rot = construct_exact(PureRotationParams{2.0, 3.0}, 1.0);
    const auto b = eval_velocity_pressure(rot, 1.0, 0.0);
    EXPECT_EQ(b.u_theta, 3.0);
    EXPECT_EQ(b.u_r, 0.0);
    EXPECT_DOUBLE_EQ(b.P, -9.0 / 4.0);

    const auto tan = construct_exact(TanParams{1.0, 0.0, 0.0}, 1.0);
    const auto c = eval_velocity_pressure(tan, std::exp(1.0), oracle::pi / 4);
    EXPECT_NEAR(c.u_theta, std::exp(-1.0), 1e-15);
    EXPECT_NEAR(c.u_r, std::exp(-1.0), 1e-15);
}

TEST(EvalVelocityPressure, OutsideValidityThrows) {
    const auto tan = construct_exact(TanParams{1.0, 0.0, 0.0}, 1.0);
    try {
        (void)eval_velocity_pressure(tan, 1.0, 1.6);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::OutOfValidity);
    }
    EXPECT_THROW((void)eval_velocity_pressure(tan, -1.0, 0.5), Error);
}

TEST(ProfileResidual, CosPowerOnFineGridIsSecondOrderSmall) {
    const auto sol = construct_exact(CosPowerParams{2.0, 1.0, 0.0}, 1.0);
    const auto prof = tabulate(sol, 1001);
    EXPECT_EQ(prof.size(), 1001u);
    EXPECT_DOUBLE_EQ(prof.h_theta(), 1e-3);
    const auto r = profile_residual(prof);
    EXPECT_LE(r.momentum, 1e-6);
    EXPECT_LE(r.continuity, 1e-6);
}

TEST(ProfileResidual, ConstantRotationIsZeroToRounding) {
    AngularProfile prof;
    prof.alpha = 2.0;
    prof.p = -9.0 / 4.0;
    for (int k = 0; k < 11; ++k) {
        prof.theta.push_back(0.1 * k);
        prof.v.push_back(3.0);
        prof.f.push_back(0.0);
    }
    const auto r = profile_residual(prof);
    EXPECT_LE(r.momentum, 1e-13);
    EXPECT_LE(r.continuity, 1e-13);
}

TEST(ProfileResidual, DetectsSingleCorruptedNode) {
    auto prof = tabulate(construct_exact(CosPowerParams{2.0, 1.0, 0.0}, 1.0), 101);
    prof.f[50] += 0.1;
    EXPECT_GE(profile_residual(prof).momentum, 0.01);
}

TEST(ProfileResidual, NeedsNineNodes) {
    const auto prof = tabulate(construct_exact(TanParams{1.0, 0.0, 0.0}, 1.0), 8);
    EXPECT_THROW((void)profile_residual(prof), Error);
}

TEST(WriteProfileCsv, HeaderAndMetadata) {
    const auto path = std::filesystem::temp_directory_path() / "heuler_profile_test.csv";
    const auto sol = construct_exact(TanParams{1.0, 0.0, 0.0}, 1.0);
    write_profile_csv(path, tabulate(sol, 11), "TanFamily", sol.describe());
    std::ifstream in(path);
    std::string meta, header, row;
    std::getline(in, meta);
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_NE(meta.find("alpha=1"), std::string::npos);
    EXPECT_NE(meta.find("TanFamily"), std::string::npos);
    EXPECT_EQ(header, "theta,v,f");
    EXPECT_EQ(row, "0,1,0");
    std::filesystem::remove(path);
}
