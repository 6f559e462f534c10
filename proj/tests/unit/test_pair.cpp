#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "models.hpp"
#include "rwre/pair.hpp"
#include "rwre/regen.hpp"

namespace rwre
{
namespace
{

std::shared_ptr<const EnvironmentModel> backtracking()
{
    return std::make_shared<const EnvironmentModel>(EnvironmentModel::dirichlet(
        test::support({make_site({1, 0}), make_site({-1, 0}), make_site({0, 1}), make_site({0, -1})}),
        {6, 1, 2, 2}, 0.02));
}

TEST(CountIntersections, IdenticalWalksGiveRangeSize)
{
    Environment env(test::dirichlet_drift(), 2);
    auto p = simulate_pair(env, Site{}, Site{}, 1000, WalkSeed{7}, WalkSeed{7});
    std::set<Site> range(p.x.sites.begin(), p.x.sites.begin() + 1000);
    EXPECT_EQ(count_intersections(p, 1000), range.size());
    EXPECT_LE(count_intersections(p, 1000), 1000u);
}

TEST(CountIntersections, DisjointRows)
{
    Environment env(test::ballistic(), 2);
    auto p = simulate_pair(env, Site{}, make_site({0, 5}), 100, WalkSeed{1}, WalkSeed{2});
    EXPECT_EQ(count_intersections(p, 100), 0u);
}

TEST(CountIntersections, MonotoneInHorizon)
{
    Environment env(test::dirichlet_drift(), 9);
    auto p = simulate_pair(env, Site{}, Site{}, 2000, WalkSeed{1}, WalkSeed{2});
    std::size_t prev = 0;
    for (std::size_t n : {1, 10, 100, 1000, 2000})
    {
        auto c = count_intersections(p, n);
        EXPECT_GE(c, prev);
        prev = c;
    }
    EXPECT_THROW(count_intersections(p, 5000), std::invalid_argument);
}

TEST(JointRegeneration, MonotoneWalks)
{
    Environment env(test::ballistic(), 1);
    auto r = first_joint_regeneration(env, Site{}, make_site({0, 5}), WalkSeed{1}, WalkSeed{2}, {});
    ASSERT_TRUE(r.Lambda);
    EXPECT_TRUE(r.confirmed);
    EXPECT_EQ(r.lambda_levels.front(), 1);
    EXPECT_EQ(*r.Lambda, 1);
    EXPECT_EQ(r.mu1, 1u);
    EXPECT_EQ(r.mu1_tilde, 1u);
}

TEST(JointRegeneration, SameWalkIsItsOwnPartner)
{
    auto model = backtracking();
    for (std::uint64_t s = 0; s < 20; ++s)
    {
        Environment env(model, s);
        JointRegenConfig cfg;
        auto r = first_joint_regeneration(env, Site{}, Site{}, WalkSeed{s + 100}, WalkSeed{s + 100}, cfg);
        ASSERT_TRUE(r.confirmed);
        EXPECT_EQ(r.mu1, r.mu1_tilde);
        auto path = simulate(env, Site{}, r.end + 1, WalkSeed{s + 100});
        EXPECT_EQ(first_passage(path, *r.Lambda), r.mu1);
        EXPECT_EQ(path.levels[r.mu1], *r.Lambda);
        // Confirmed levels are never undercut within the margin window.
        for (std::size_t k = r.mu1; k <= r.end; ++k)
            ASSERT_GE(path.levels[k], *r.Lambda);
    }
}

TEST(JointRegeneration, InvariantsOnBacktrackingModel)
{
    auto model = backtracking();
    for (std::uint64_t s = 0; s < 200; ++s)
    {
        Environment env(model, s);
        const Site y = make_site({0, 3});
        LazyPath a(2, unit(0), Site{}, QuenchedStepper(env, WalkSeed{2 * s}));
        LazyPath b(2, unit(0), y, QuenchedStepper(env, WalkSeed{2 * s + 1}));
        JointRegenConfig cfg;
        auto r = first_joint_regeneration(a, 0, b, 0, 0, 1, cfg);
        ASSERT_TRUE(r.confirmed);
        const Level L = *r.Lambda;
        EXPECT_GT(L, 0);
        EXPECT_EQ(a.level(r.mu1), L);
        EXPECT_EQ(b.level(r.mu1_tilde), L);
        for (std::size_t k = 0; k < r.mu1; ++k)
            ASSERT_LT(a.level(k), L);
        for (std::size_t k = 0; k < r.mu1_tilde; ++k)
            ASSERT_LT(b.level(k), L);
        for (std::size_t k = r.mu1; k <= r.end; ++k)
            ASSERT_GE(a.level(k), L);
        for (std::size_t k = r.mu1_tilde; k <= r.end_tilde; ++k)
            ASSERT_GE(b.level(k), L);
        for (std::size_t i = 1; i < r.lambda_levels.size(); ++i)
            EXPECT_LT(r.lambda_levels[i - 1], r.lambda_levels[i]);
        EXPECT_EQ(r.lambda_levels.back(), L);
    }
}

TEST(JointRegeneration, MismatchedLevelsRejected)
{
    Environment env(test::ballistic(), 1);
    EXPECT_THROW(first_joint_regeneration(env, Site{}, make_site({1, 0}), WalkSeed{1}, WalkSeed{2}, {}),
                 std::invalid_argument);
}

TEST(YChain, DeterministicIsRigid)
{
    const Site x0 = make_site({0, 3});
    auto y = sample_Y_chain(test::ballistic(), x0, 10, 5);
    auto ybar = sample_Ybar_chain(test::ballistic(), x0, 10, 5);
    ASSERT_EQ(y.y.size(), 11u);
    for (const auto& s : y.y)
        EXPECT_EQ(s, x0);
    for (const auto& s : ybar.y)
        EXPECT_EQ(s, x0);
}

TEST(YChain, StaysInHyperplane)
{
    auto model = backtracking();
    for (std::uint64_t s = 0; s < 10; ++s)
    {
        auto y = sample_Y_chain(model, make_site({0, 2}), 20, s);
        auto ybar = sample_Ybar_chain(model, make_site({0, 2}), 20, s);
        for (const auto& v : y.y)
            EXPECT_EQ(v[0], 0);
        for (const auto& v : ybar.y)
            EXPECT_EQ(v[0], 0);
    }
    EXPECT_THROW(sample_Y_chain(model, make_site({1, 0}), 3, 1), std::invalid_argument);
}

// Total variation distance between two empirical laws.
double tv(const std::map<Coord, double>& a, const std::map<Coord, double>& b)
{
    std::set<Coord> keys;
    for (const auto& [k, v] : a)
        keys.insert(k);
    for (const auto& [k, v] : b)
        keys.insert(k);
    double d = 0;
    for (auto k : keys)
    {
        double pa = a.count(k) ? a.at(k) : 0.0;
        double pb = b.count(k) ? b.at(k) : 0.0;
        d += std::abs(pa - pb);
    }
    return d / 2;
}

std::map<Coord, double> ybar_increment_law(const Site& x0, std::size_t samples, std::uint64_t seed)
{
    auto model = test::dirichlet_drift();
    std::map<Coord, double> law;
    for (std::size_t i = 0; i < samples; ++i)
    {
        auto c = sample_Ybar_chain(model, x0, 1, derive_seed(seed, "ybar-test", i));
        law[c.y[1][1] - c.y[0][1]] += 1.0 / static_cast<double>(samples);
    }
    return law;
}

TEST(YbarChain, TranslationInvariantAndSymmetric)
{
    const std::size_t n = 40000;
    auto from_x0 = ybar_increment_law(make_site({0, 4}), n, 1);
    auto from_0 = ybar_increment_law(Site{}, n, 2);
    EXPECT_LT(tv(from_x0, from_0), 0.03);

    std::map<Coord, double> reflected;
    for (const auto& [k, v] : from_x0)
        reflected[-k] = v;
    EXPECT_LT(tv(from_x0, reflected), 0.03);
}

TEST(CoupledTriple, BallisticRowsNeverMeet)
{
    for (std::uint64_t s = 0; s < 50; ++s)
    {
        auto out = coupled_triple(test::ballistic(), make_site({0, 1}), s);
        EXPECT_FALSE(out.hit_X_path);
        EXPECT_TRUE(out.equal);
        EXPECT_EQ(out.Y1, make_site({0, 1}));
        EXPECT_EQ(out.rejections, 0u);
    }
}

TEST(CoupledTriple, HomogeneousMissImpliesEqual)
{
    for (std::uint64_t s = 0; s < 200; ++s)
    {
        auto out = coupled_triple(test::homogeneous_drift(), make_site({0, 1}), s);
        if (!out.hit_X_path)
        {
            ASSERT_TRUE(out.equal);
        }
        EXPECT_EQ(out.Y1[0], 0);
    }
}

TEST(CoupledTriple, FarStartsNeverMeet)
{
    auto model = test::dirichlet_drift();
    for (std::uint64_t s = 0; s < 200; ++s)
    {
        auto out = coupled_triple(model, make_site({0, 10000}), s);
        EXPECT_FALSE(out.hit_X_path);
        EXPECT_TRUE(out.equal);
    }
}

TEST(CoupledTriple, MissImpliesEqual)
{
    auto model = backtracking();
    std::size_t mismatches = 0;
    for (std::uint64_t s = 0; s < 500; ++s)
    {
        auto out = coupled_triple(model, make_site({0, 2}), s);
        if (!out.hit_X_path)
        {
            ASSERT_TRUE(out.equal);
        }
        mismatches += out.equal ? 0 : 1;
        EXPECT_EQ(out.Y1[0], 0);
        EXPECT_EQ(out.Ybar1[0], 0);
    }
    EXPECT_GT(mismatches, 0u);
}

TEST(SupportInheritance, Deterministic)
{
    const Site x0 = make_site({0, 2});
    auto r = support_inheritance_check(test::ballistic(), x0, 200, 1);
    ASSERT_EQ(r.atoms.size(), 1u);
    EXPECT_EQ(r.atoms[0].y, x0);
    EXPECT_TRUE(r.q_only.empty());
}

TEST(SupportInheritance, DriftModelHasNoFrequentQOnlyAtom)
{
    auto r = support_inheritance_check(test::dirichlet_drift(), make_site({0, 4}), 20000, 3);
    EXPECT_TRUE(r.flagged.empty());
    EXPECT_FALSE(r.note.empty());
}

TEST(SupportInheritance, DisjointRangesAgree)
{
    auto r = support_inheritance_check(test::ballistic(), make_site({0, 50}), 500, 1);
    EXPECT_TRUE(r.q_only.empty());
}

TEST(WriteReplicaCsv, Header)
{
    std::ostringstream os;
    std::vector<CouplingOutcome> rows;
    write_replica_csv(os, 2, rows);
    EXPECT_EQ(os.str(), "replica,x0_1,x0_2,Lambda,mu1,mu1_tilde,Y1_1,Y1_2,Ybar1_1,Ybar1_2,equal,hit_X_path,rejections\n");
}

}  // namespace
}  // namespace rwre
