#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/walk.hpp"

namespace rwre
{

//! Two quenched paths in one environment with distinct walk seeds.
struct PairPath
{
    WalkPath x;
    WalkPath x_tilde;
};

PairPath simulate_pair(const Environment& env, const Site& x, const Site& y, std::size_t n,
                       WalkSeed seed_x, WalkSeed seed_y);

// |X_[0,n) ∩ X̃_[0,n)| as a set of sites.
std::size_t count_intersections(const PairPath& p, std::size_t n);

struct JointRegenConfig
{
    Level margin = 20;                  // levels above Λ each walk must reach
    std::size_t horizon_cap = 1 << 22;  // realized sites per walk
};

//---------------------------------------------------------------------------//
/*!
 * Outcome of the joint fresh-level iteration for two walks started on a common
 * level.
 *
 * `lambda_levels` lists every common fresh level that was tested; the last one
 * is Λ when `confirmed` holds. `end` and `end_tilde` are the largest path
 * indices the iteration read.
 */
struct JointRegenRecord
{
    std::vector<Level> lambda_levels;
    std::optional<Level> Lambda;
    std::size_t mu1 = 0;
    std::size_t mu1_tilde = 0;
    bool confirmed = false;
    std::size_t end = 0;
    std::size_t end_tilde = 0;
};

// Runs the iteration on two lazily extended walks from indices (from, from_tilde),
// both at level `start_level`.
JointRegenRecord first_joint_regeneration(LazyPath& a, std::size_t from,
                                          LazyPath& b, std::size_t from_tilde,
                                          Level start_level, Level h,
                                          const JointRegenConfig& config);

// Convenience form for two walks in `env` from x and y.
JointRegenRecord first_joint_regeneration(const Environment& env, const Site& x, const Site& y,
                                          WalkSeed seed_x, WalkSeed seed_y,
                                          const JointRegenConfig& config);

struct YChainConfig
{
    JointRegenConfig joint;
    std::size_t rejection_cap = 10000;
};

struct YChainSample
{
    std::vector<Site> y;  // Y_0 = x0, Y_1, ..., Y_K
    std::vector<Level> Lambda;
    std::size_t rejections = 0;  // first-slab backtracks
    std::size_t restarts = 0;    // later slabs redrawn after dipping below Λ_k
};

// Y_k = X̃_{μ̃_k} - X_{μ_k} for walks from 0 and x0 in one environment.
YChainSample sample_Y_chain(std::shared_ptr<const EnvironmentModel> model, const Site& x0,
                            std::size_t K, std::uint64_t seed, const YChainConfig& config = {});

// Same construction with X and X̃ in independent environments.
YChainSample sample_Ybar_chain(std::shared_ptr<const EnvironmentModel> model, const Site& x0,
                               std::size_t K, std::uint64_t seed, const YChainConfig& config = {});

//---------------------------------------------------------------------------//
// Three-walk coupling
//---------------------------------------------------------------------------//

struct CouplingConfig
{
    JointRegenConfig joint;
    Level lookahead = 40;  // X is kept this many levels ahead of X̄
    std::size_t triple_cap = 10000;
};

struct CouplingOutcome
{
    Site x0{};
    Site Y1{};
    Site Ybar1{};
    bool equal = false;
    bool hit_X_path = false;
    std::size_t M = 0;
    std::size_t M_bar = 0;
    Level Lambda = 0;
    std::size_t mu1 = 0;
    std::size_t mu1_tilde = 0;
    std::size_t rejections = 0;  // triples discarded before max(M, M̄)
};

CouplingOutcome coupled_triple(std::shared_ptr<const EnvironmentModel> model, const Site& x0,
                               std::uint64_t seed, const CouplingConfig& config = {});

void write_replica_csv(std::ostream& os, int dim, std::span<const CouplingOutcome> rows);

//---------------------------------------------------------------------------//

struct SupportAtom
{
    Site y{};
    std::size_t count_q = 0;
    std::size_t count_qbar = 0;
};

struct SupportReport
{
    std::size_t samples = 0;
    std::vector<SupportAtom> atoms;    // union of both empirical supports
    std::vector<SupportAtom> q_only;   // seen under q, never under q̄
    std::vector<SupportAtom> flagged;  // q_only with frequency above threshold
    double threshold = 0;
    std::string note;
};

// Compares empirical supports of q(x0, ·) and q̄(x0, ·) from `samples` draws
// each. Atoms seen only under q are flagged when their frequency exceeds
// `threshold_factor / samples`.
SupportReport support_inheritance_check(std::shared_ptr<const EnvironmentModel> model, const Site& x0,
                                        std::size_t samples, std::uint64_t seed, unsigned workers = 1,
                                        double threshold_factor = 10, const YChainConfig& config = {});

}  // namespace rwre
