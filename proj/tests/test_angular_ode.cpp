#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "heuler/angular_ode.hpp"
#include "oracles.hpp"

using namespace heuler;

TEST(IntegrateAlpha1, TangentAtHalf) {
    const auto run = integrate_alpha1(1.0, 0.0, 0.0, {0.0, 0.5}, OdeConfig{1e-3, 1e8});
    ASSERT_TRUE(run.completed());
    EXPECT_NEAR(run.profile.f.back(), std::tan(0.5), 1e-8);
    EXPECT_NEAR(run.profile.f.back(), 0.546302, 1e-6);
    EXPECT_EQ(run.profile.theta.back(), 0.5);
}

TEST(IntegrateAlpha1, ZeroIsConstantOnRationalBranch) {
    const auto run = integrate_alpha1(1.0, -0.5, 0.0, {0.0, 1.0});
    ASSERT_TRUE(run.completed());
    for (double f : run.profile.f) EXPECT_EQ(f, 0.0);
}

TEST(IntegrateAlpha1, BlowUpNearHalfPi) {
    const auto run = integrate_alpha1(1.0, 0.0, 0.0, {0.0, 2.0});
    EXPECT_EQ(run.status, OdeStatus::BlowUp);
    ASSERT_TRUE(run.stop_theta.has_value());
    EXPECT_NEAR(*run.stop_theta, oracle::pi / 2, 1e-5);
    EXPECT_LT(run.profile.theta.back(), oracle::pi / 2);
}

TEST(IntegrateAlpha1, ZeroSwirlIsRejected) {
    try {
        (void)integrate_alpha1(0.0, 0.0, 1.0, {0.0, 1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ZeroSwirl);
    }
}

TEST(IntegrateAlpha1, ObservedOrderIsFour) {
    const double e1 = std::abs(integrate_alpha1(1.0, 0.0, 0.0, {0.0, 1.0}, {0.02}).profile.f.back() - std::tan(1.0));
    const double e2 = std::abs(integrate_alpha1(1.0, 0.0, 0.0, {0.0, 1.0}, {0.01}).profile.f.back() - std::tan(1.0));
    EXPECT_GE(e1 / e2, 12.0);
    EXPECT_GE(std::log2(e1 / e2), 3.5);
}

TEST(IntegrateGeneral, SecantAtOne) {
    const auto run = integrate_general(2.0, 0.0, 1.0, 0.0, {0.0, 1.0});
    ASSERT_TRUE(run.completed());
    EXPECT_NEAR(run.profile.v.back(), oracle::sec(1.0), 1e-7);
    EXPECT_NEAR(run.profile.v.back(), 1.850816, 1e-6);
}

TEST(IntegrateGeneral, MatchesSinFamily) {
    const double C = oracle::pi / 3;
    const auto run = integrate_general(2.0, -0.5, std::sin(C), -std::cos(C), {0.0, 0.5});
    ASSERT_TRUE(run.completed());
    for (std::size_t k = 0; k < run.profile.size(); k += 50) {
        EXPECT_NEAR(run.profile.v[k], oracle::sin_v(C, run.profile.theta[k]), 1e-10);
        EXPECT_NEAR(run.profile.f[k], oracle::sin_f(C, run.profile.theta[k]), 1e-10);
    }
}

TEST(IntegrateGeneral, ZeroSwirlStartIsSingular) {
    try {
        (void)integrate_general(3.0, -0.5, 0.0, 1.0, {0.0, 1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SingularSwirl);
    }
}

TEST(IntegrateGeneral, StopsBeforeSwirlVanishes) {
    // v = sin(pi/3 - theta) reaches zero at theta = pi/3.
    const double C = oracle::pi / 3;
    const auto run = integrate_general(2.0, -0.5, std::sin(C), -std::cos(C), {0.0, 1.5});
    EXPECT_FALSE(run.completed());
    ASSERT_TRUE(run.stop_theta.has_value());
    EXPECT_NEAR(*run.stop_theta, C, 1e-2);
    EXPECT_LT(run.profile.theta.back(), C);
}

TEST(IntegrateGeneral, ObservedOrderIsFour) {
    auto err = [](double h) {
        return std::abs(integrate_general(2.0, 0.0, 1.0, 0.0, {0.0, 1.0}, {h}).profile.v.back() - oracle::sec(1.0));
    };
    EXPECT_GE(std::log2(err(0.02) / err(0.01)), 3.5);
}

TEST(OdeConfig, RejectsBadSteps) {
    EXPECT_THROW((void)integrate_alpha1(1.0, 0.0, 0.0, {0.0, 1.0}, {0.0}), Error);
    EXPECT_THROW((void)integrate_alpha1(1.0, 0.0, 0.0, {0.0, 1.0}, {0.2}), Error);
    EXPECT_THROW((void)integrate_alpha1(1.0, 0.0, 0.0, {0.0, 1.0}, {1e-3, -1.0}), Error);
}

TEST(Invariants, WEquationResidualIsSecondOrder) {
    const auto run = integrate_alpha1(1.0, -1.0, 0.5, {0.0, 2.0}, {1e-3});
    ASSERT_TRUE(run.completed());
    const double res = w_equation_residual(run.profile);
    EXPECT_LE(res, 10.0 * 1e-6);
}

TEST(Invariants, MassIdentityHoldsAlongGeneralProfile) {
    const auto run = integrate_general(2.0, 0.0, 1.0, 0.0, {0.0, 1.0}, {1e-3});
    EXPECT_LE(mass_identity_defect(run.profile), 1e-5);
}

TEST(PeriodicShooting, FindsTheTwoConstants) {
    const auto rep = periodic_shooting(1.0, -1.0, uniform_values(-2.0, 2.0, 41));
    EXPECT_EQ(rep.members.size(), 41u);
    EXPECT_EQ(rep.periodic_count, 2);
    EXPECT_TRUE(rep.periodic_members_constant);
    EXPECT_DOUBLE_EQ(rep.lambda, 1.0);
    for (const auto& m : rep.members) {
        if (m.is_periodic) {
            EXPECT_EQ(std::abs(m.f0), 1.0);
            EXPECT_LT(m.defect, kPeriodicDefectTol);
        } else {
            EXPECT_TRUE(m.defect > 1e-3 || m.blowup_theta.has_value()) << "f0=" << m.f0;
        }
    }
}

TEST(PeriodicShooting, HalfIsATransient) {
    const auto rep = periodic_shooting(1.0, -1.0, {0.5});
    ASSERT_EQ(rep.members.size(), 1u);
    EXPECT_FALSE(rep.members[0].is_periodic);
    EXPECT_GT(rep.members[0].defect, 1e-3);
}

TEST(PeriodicShooting, TanBranchesHaveNoPeriodicMembers) {
    const auto rep = periodic_shooting(1.0, 0.0, uniform_values(-2.0, 2.0, 9));
    EXPECT_EQ(rep.periodic_count, 0);
    for (const auto& m : rep.members) EXPECT_TRUE(m.blowup_theta.has_value());
}

TEST(PeriodicShooting, JsonHasPerMemberRecords) {
    const auto rep = periodic_shooting(1.0, -1.0, {-1.0, 0.0});
    const auto j = rep.to_json();
    ASSERT_EQ(j.at("members").size(), 2u);
    EXPECT_TRUE(j.at("members")[0].at("is_periodic").get<bool>());
    EXPECT_TRUE(j.at("members")[0].contains("f_range"));
}

TEST(UniformValues, EndpointsAreExact) {
    const auto v = uniform_values(-2.0, 2.0, 41);
    EXPECT_EQ(v.front(), -2.0);
    EXPECT_EQ(v.back(), 2.0);
    EXPECT_EQ(v[10], -1.0);
    EXPECT_EQ(v[30], 1.0);
}
