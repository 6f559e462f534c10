#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "models.hpp"
#include "rwre/rng.hpp"

namespace rwre
{
namespace
{

using test::support;

TEST(SiteVector, PointMass)
{
    Environment env(test::ballistic(), 99);
    for (auto x : {make_site({0, 0}), make_site({-7, 3}), make_site({100000, -5})})
    {
        auto v = env.site_vector(x);
        ASSERT_EQ(v.size, 1u);
        EXPECT_EQ(v[0], 1.0);
    }
}

TEST(SiteVector, RepeatQueryIsIdentical)
{
    auto model = test::dirichlet_drift(1, 1, 0);
    Environment a(model, 5), b(model, 5);
    auto x = make_site({3, 4});
    auto v1 = a.site_vector(x);
    auto v2 = a.site_vector(x);
    auto v3 = b.site_vector(x);
    for (std::size_t i = 0; i < v1.size; ++i)
    {
        EXPECT_EQ(v1[i], v2[i]);
        EXPECT_EQ(v1[i], v3[i]);
    }
}

TEST(SiteVector, DirichletMatchesKeyedRecomputation)
{
    auto model = std::make_shared<const EnvironmentModel>(EnvironmentModel::dirichlet(
        support({make_site({1, 0}), make_site({0, 1}), make_site({0, -1})}), {1, 1, 1}));
    const std::uint64_t seed = 2024;
    Environment env(model, seed);
    auto x = make_site({3, 4});
    auto v = env.site_vector(x);
    double total = 0;
    for (std::size_t i = 0; i < v.size; ++i)
    {
        EXPECT_GT(v[i], 0.0);
        total += v[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);

    // The environment draws ω_x from the site key; the model's draw with that
    // key must give the same vector.
    auto w = model->draw(fold_site(mix64(seed), x));
    for (std::size_t i = 0; i < v.size; ++i)
        EXPECT_EQ(v[i], w[i]);
}

TEST(SiteVector, NeighbouringSitesDiffer)
{
    Environment env(test::dirichlet_drift(1, 1, 0), 1);
    auto a = env.site_vector(make_site({0, 0}));
    auto b = env.site_vector(make_site({0, 1}));
    EXPECT_NE(a[0], b[0]);
}

TEST(SiteVector, DirichletMeanMatchesAlpha)
{
    auto model = std::make_shared<const EnvironmentModel>(EnvironmentModel::dirichlet(
        support({make_site({1, 0}), make_site({0, 1}), make_site({0, -1})}), {3, 1, 0.5}));
    Environment env(model, 77);
    std::vector<double> sum(3, 0.0), sq(3, 0.0);
    const int n = 40000;
    for (int k = 0; k < n; ++k)
    {
        auto v = env.site_vector(make_site({k, -k}));
        for (int i = 0; i < 3; ++i)
        {
            sum[i] += v[i];
            sq[i] += v[i] * v[i];
        }
    }
    const double a0 = 4.5;
    const double alpha[3] = {3, 1, 0.5};
    for (int i = 0; i < 3; ++i)
    {
        double m = alpha[i] / a0;
        double var = m * (1 - m) / (a0 + 1);
        EXPECT_NEAR(sum[i] / n, m, 4 * std::sqrt(var / n)) << "component " << i;
    }
}

TEST(SiteVector, FloorKeepsEntriesAboveKappa)
{
    Environment env(test::dirichlet_drift(0.2, 0.2, 0.05), 3);
    for (int k = 0; k < 2000; ++k)
    {
        auto v = env.site_vector(make_site({k, 2 * k}));
        for (std::size_t i = 0; i < v.size; ++i)
            EXPECT_GE(v[i], 0.05 - 1e-15);
    }
}

TEST(SiteVector, MixtureOnlyProducesAtoms)
{
    auto J = support({make_site({1, 0}), make_site({-1, 0})}, unit(0), 2);
    auto model = std::make_shared<const EnvironmentModel>(
        EnvironmentModel::mixture(J, {{{0.9, 0.1}, 0.25}, {{0.6, 0.4}, 0.75}}));
    Environment env(model, 8);
    int first = 0;
    const int n = 20000;
    for (int k = 0; k < n; ++k)
    {
        auto v = env.site_vector(make_site({k, 0}));
        ASSERT_TRUE(v[0] == 0.9 || v[0] == 0.6);
        first += v[0] == 0.9;
    }
    EXPECT_NEAR(first / double(n), 0.25, 4 * std::sqrt(0.25 * 0.75 / n));
}

TEST(EnvironmentModel, RejectsBadInput)
{
    auto J = support({make_site({1, 0}), make_site({0, 1})});
    EXPECT_THROW(EnvironmentModel::deterministic(J, {0.5, 0.6}), std::invalid_argument);
    EXPECT_THROW(EnvironmentModel::deterministic(J, {1.0}), std::invalid_argument);
    EXPECT_THROW(EnvironmentModel::dirichlet(J, {1.0, 0.0}), std::invalid_argument);
    EXPECT_THROW(EnvironmentModel::deterministic(support({make_site({1, 0}), make_site({1, 0})}), {0.5, 0.5}),
                 std::invalid_argument);
    EXPECT_THROW(EnvironmentModel::deterministic(J, {0.5, 0.5}, 0.6), std::invalid_argument);
}

TEST(ComputeH, Examples)
{
    EXPECT_EQ(compute_h(support({make_site({1, 0}), make_site({0, 1}), make_site({0, -1})})), 1);
    EXPECT_EQ(compute_h(support({make_site({2, 0}), make_site({0, 1})})), 2);
    EXPECT_EQ(compute_h(support({make_site({3, 0}), make_site({-6, 1})})), 3);
    EXPECT_THROW(compute_h(support({make_site({0, 1}), make_site({0, -1})})), std::invalid_argument);
}

TEST(CheckHypotheses, Ballistic)
{
    auto r = check_hypotheses(*test::ballistic());
    ASSERT_TRUE(r.non_nestling);
    EXPECT_TRUE(r.non_nestling->holds);
    EXPECT_DOUBLE_EQ(r.non_nestling->delta, 1.0);
    EXPECT_FALSE(r.r_span);
}

TEST(CheckHypotheses, HomogeneousDrift)
{
    auto r = check_hypotheses(*test::homogeneous_drift());
    ASSERT_TRUE(r.non_nestling);
    EXPECT_TRUE(r.non_nestling->holds);
    EXPECT_DOUBLE_EQ(r.non_nestling->delta, 0.5);
    EXPECT_TRUE(r.r_span);
    EXPECT_TRUE(r.r_restricted_path);
    EXPECT_EQ(r.gcd_h, 1);
}

TEST(CheckHypotheses, DirichletNeedsFloor)
{
    auto bare = check_hypotheses(*test::dirichlet_drift(3, 1, 0));
    ASSERT_TRUE(bare.non_nestling);
    EXPECT_FALSE(bare.non_nestling->holds);
    EXPECT_DOUBLE_EQ(bare.non_nestling->delta, 0.0);

    auto floored = check_hypotheses(*test::dirichlet_drift(3, 1, 0.05));
    EXPECT_TRUE(floored.non_nestling->holds);
    EXPECT_NEAR(floored.non_nestling->delta, 0.05, 1e-15);
}

TEST(Rng, DeriveSeedSeparatesTagsAndIndices)
{
    EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "b", 0));
    EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
    EXPECT_NE(derive_seed(1, "a", 0), derive_seed(2, "a", 0));
    EXPECT_EQ(derive_seed(1, "a", 7), derive_seed(1, "a", 7));
}

TEST(Rng, UniformsLookUniform)
{
    SplitMix64 rng(12345);
    std::vector<int> bins(10, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i)
    {
        double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ++bins[static_cast<int>(u * 10)];
    }
    double chi2 = 0;
    for (int b : bins)
        chi2 += (b - n / 10.0) * (b - n / 10.0) / (n / 10.0);
    EXPECT_LT(chi2, 27.88);  // 99.9% quantile, 9 dof
}

}  // namespace
}  // namespace rwre
