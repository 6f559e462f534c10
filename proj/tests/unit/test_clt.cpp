#include <gtest/gtest.h>

#include <cmath>

#include "models.hpp"
#include "rwre/clt.hpp"
#include "rwre/regen.hpp"
#include "rwre/walk.hpp"

namespace rwre
{
namespace
{

TEST(DegeneracyDirections, TwoStepsGiveDiagonal)
{
    auto m = test::deterministic({make_site({1, 0}), make_site({0, 1})}, {0.5, 0.5},
                                 make_site({1, 1}));
    Eigen::MatrixXd B = degeneracy_directions(*m);
    ASSERT_EQ(B.cols(), 1);
    EXPECT_NEAR(B(0, 0), std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(B(1, 0), std::sqrt(0.5), 1e-12);
}

TEST(DegeneracyDirections, SpanningStepsGiveNothing)
{
    EXPECT_EQ(degeneracy_directions(*test::homogeneous_drift()).cols(), 0);
    EXPECT_EQ(degeneracy_directions(*test::dirichlet_drift()).cols(), 0);
}

TEST(DegeneracyDirections, SingleStepIsFullyDegenerate)
{
    EXPECT_EQ(degeneracy_directions(*test::ballistic()).cols(), 2);
}

TEST(QuenchedSamples, DeterministicWalkIsZero)
{
    Environment env(test::ballistic(), 1);
    std::vector<double> v{1.0, 0.0};
    auto s = quenched_samples(env, 100, 10, v, 5);
    ASSERT_EQ(s.size(), 10u);
    for (const auto& b : s)
        EXPECT_LT(b.norm(), 1e-12);
}

TEST(QuenchedSamples, MatchesDiffusiveScaleOfSameWalk)
{
    Environment env(test::dirichlet_drift(), 4);
    std::vector<double> v{0.55, 0.0};
    auto s = quenched_samples(env, 400, 1, v, 9);
    WalkPath p = simulate(env, Site{}, 400, WalkSeed{derive_seed(9, "quenched-walk", 0)});
    std::vector<double> t{1.0};
    auto ds = diffusive_scale(p, v, 400, t);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_NEAR(s[0][0], ds[0][0], 1e-12);
    EXPECT_NEAR(s[0][1], ds[0][1], 1e-12);
}

TEST(QuenchedSamples, Errors)
{
    Environment env(test::ballistic(), 1);
    std::vector<double> v{1.0};
    EXPECT_THROW(quenched_samples(env, 10, 2, v, 1), std::invalid_argument);
    std::vector<double> v2{1.0, 0.0};
    EXPECT_THROW(quenched_samples(env, 0, 2, v2, 1), std::invalid_argument);
}

TEST(CltCheck, DegenerateConsistent)
{
    std::vector<std::vector<Eigen::VectorXd>> samples(3, std::vector<Eigen::VectorXd>(20, Eigen::VectorXd::Zero(2)));
    auto rep = clt_check(samples, Eigen::MatrixXd::Zero(2, 2), unit(0));
    EXPECT_TRUE(rep.degenerate);
    EXPECT_EQ(rep.verdict, "degenerate, consistent");
    EXPECT_EQ(rep.passing, 3u);

    samples[1][4][1] = 0.5;
    rep = clt_check(samples, Eigen::MatrixXd::Zero(2, 2), unit(0));
    EXPECT_EQ(rep.verdict, "degenerate, inconsistent");
    EXPECT_EQ(rep.passing, 2u);
}

TEST(CltCheck, GaussianSamplesMostlyPass)
{
    Eigen::MatrixXd D(2, 2);
    D << 0.25, 0.0, 0.0, 0.45;
    SplitMix64 rng(123);
    std::vector<std::vector<Eigen::VectorXd>> samples(40);
    for (auto& env : samples)
        for (int k = 0; k < 500; ++k)
        {
            Eigen::VectorXd b(2);
            b << 0.5 * sample_normal(rng), std::sqrt(0.45) * sample_normal(rng);
            env.push_back(b);
        }
    auto rep = clt_check(samples, D, unit(0), 0.05);
    EXPECT_FALSE(rep.degenerate);
    std::size_t above = 0, total = 0;
    for (const auto& e : rep.environments)
        for (const auto& t : e.tests)
        {
            ++total;
            above += t.p_value > 0.05 ? 1 : 0;
        }
    EXPECT_GE(static_cast<double>(above) / static_cast<double>(total), 0.85);
    EXPECT_LT(rep.max_frobenius_to_d, 0.15);
}

TEST(CltCheck, WrongVarianceFails)
{
    Eigen::MatrixXd D = Eigen::MatrixXd::Identity(2, 2);
    SplitMix64 rng(7);
    std::vector<std::vector<Eigen::VectorXd>> samples(5);
    for (auto& env : samples)
        for (int k = 0; k < 2000; ++k)
        {
            Eigen::VectorXd b(2);
            b << 0.5 * sample_normal(rng), 0.5 * sample_normal(rng);
            env.push_back(b);
        }
    auto rep = clt_check(samples, D, unit(0));
    EXPECT_EQ(rep.passing, 0u);
}

TEST(QuenchedMean, DeterministicEnvironmentIsZero)
{
    std::vector<std::size_t> grid{16, 64, 256};
    auto rep = quenched_mean_variance(test::homogeneous_drift(), grid, 30, 50, 1);
    ASSERT_EQ(rep.rows.size(), 3u);
    for (const auto& r : rep.rows)
        EXPECT_NEAR(r.trace_raw, 0.0, 6 * r.se + 1e-12) << "n=" << r.n;
    EXPECT_THROW(quenched_mean_variance(test::homogeneous_drift(), grid, 29, 50, 1), std::invalid_argument);
    EXPECT_THROW(quenched_mean_variance(test::homogeneous_drift(), grid, 30, 1, 1), std::invalid_argument);
}

TEST(QuenchedMean, BallisticIsExactlyZero)
{
    std::vector<std::size_t> grid{8, 32};
    auto rep = quenched_mean_variance(test::ballistic(), grid, 30, 4, 1);
    for (const auto& r : rep.rows)
    {
        EXPECT_EQ(r.trace, 0.0);
        EXPECT_FALSE(rep.fit_valid);
    }
}

TEST(CenteredMean, BallisticHasNoOffset)
{
    std::vector<std::size_t> grid{4, 16, 64};
    std::vector<double> v{1.0, 0.0}, se{0.0, 0.0};
    auto rep = centered_mean_bound(test::ballistic(), grid, v, se, 10, 3);
    EXPECT_EQ(rep.max_abs, 0.0);
    EXPECT_TRUE(rep.no_trend);
}

TEST(CenteredMean, WrongVelocityShowsTrend)
{
    std::vector<std::size_t> grid{64, 256, 1024};
    std::vector<double> v{0.4, 0.0}, se{0.0, 0.0};
    auto rep = centered_mean_bound(test::homogeneous_drift(), grid, v, se, 200, 3);
    EXPECT_FALSE(rep.no_trend);
    EXPECT_NEAR(rep.slope, 0.1, 0.02);
}

}  // namespace
}  // namespace rwre
