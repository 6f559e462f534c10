#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rwre/environment.hpp"
#include "rwre/green.hpp"

namespace rwre::cli
{

using Json = nlohmann::json;

struct ConfigError
{
    std::string field;
    std::string reason;
};

std::string to_string(const ConfigError& e);

// Valid experiment kinds in documentation order.
const std::vector<std::string_view>& experiment_kinds();

//---------------------------------------------------------------------------//
// Kind-specific parameters
//---------------------------------------------------------------------------//

struct CheckParams
{
};

struct RegenParams
{
    std::size_t paths = 4;
    std::size_t horizon = 200000;
    Level margin = 20;
    Level tail_cut = 20;
    double order = 2;
    std::vector<std::size_t> grid{1, 2, 4, 8, 16, 32, 64, 128, 256};
    std::optional<Site> redirect;
    std::size_t redirect_paths = 200;
    std::size_t redirect_horizon = 5000;
    std::size_t redirect_burn_in = 2500;
};

struct CltParams
{
    std::size_t n = 4096;
    std::size_t environments = 5;
    std::size_t walks = 2000;
    double alpha = 0.01;
    std::vector<double> v;
    std::vector<std::vector<double>> D;
};

struct QuenchedMeanParams
{
    std::vector<std::size_t> n_grid{16, 32, 64, 128, 256, 512, 1024};
    std::size_t environments = 200;
    std::size_t walks = 200;
};

struct IntersectionParams
{
    std::vector<std::size_t> n_grid{32, 64, 128, 256, 512, 1024, 2048, 4096};
    std::size_t replicas = 1000;
};

struct JointRegenParams
{
    Site x0{};
    std::size_t replicas = 1000;
    Level margin = 20;
    std::size_t horizon_cap = 1 << 22;
    std::vector<std::size_t> tail_grid{4, 8, 16, 32, 64};
    std::size_t chain_steps = 0;
    std::size_t chains = 0;
    bool independent = false;
};

struct CouplingParams
{
    std::vector<Site> x0;
    std::size_t triples = 10000;
    Level margin = 20;
    Level lookahead = 40;
    std::size_t support_samples = 0;
};

struct ErgodicParams
{
    std::string function = "drift_dot";
    std::vector<double> u;  // drift_dot direction; defaults to û
    double constant = 1;
    Site offset{};
    std::size_t step = 0;
    double threshold = 0.5;
    std::vector<std::size_t> checkpoints{1000, 10000, 100000};
    std::size_t runs = 20;
    std::size_t einf_chains = 0;
    std::size_t einf_length = 10000;
    std::size_t einf_burn = 1000;
};

struct VariationParams
{
    std::size_t n = 1000;
    std::vector<std::size_t> ell_grid{2, 4, 8, 16, 32, 64};
    std::size_t reps = 10000;
};

struct GreenParams
{
    std::map<long long, double> walk{{-1, 0.5}, {1, 0.5}};
    long long r0 = 0;
    long long s_max = 50;
    std::size_t ladder_depth = 0;
    std::vector<std::pair<long long, long long>> mc_points;
    std::size_t mc_reps = 100000;
    std::size_t step_cap = 10'000'000;
    std::vector<std::size_t> tail_grid;
    std::string tail_mode = "exact";
    std::size_t tail_reps = 100000;
    std::optional<long long> exit_r;
};

struct GreenBoundParams
{
    PerturbedChainSpec spec;
    std::vector<std::size_t> n_grid{16, 64, 256, 1024, 4096, 16384};
    std::size_t reps = 2000;
};

struct ExitTimeParams
{
    PerturbedChainSpec spec;
    std::vector<std::size_t> r_grid{8, 16, 32, 64, 128};
    std::size_t reps = 2000;
};

using KindParams = std::variant<CheckParams, RegenParams, CltParams, QuenchedMeanParams, IntersectionParams,
                                JointRegenParams, CouplingParams, ErgodicParams, VariationParams, GreenParams,
                                GreenBoundParams, ExitTimeParams>;

//---------------------------------------------------------------------------//
/*!
 * A parsed and validated experiment description.
 *
 * `raw` is the configuration tree exactly as read from the file and is
 * embedded in every summary.
 */
struct ExperimentConfig
{
    std::string kind;
    std::uint64_t master_seed = 1;
    unsigned workers = 1;
    std::string output_dir = "out";
    std::shared_ptr<const EnvironmentModel> model;
    KindParams params;
    Json raw;
};

struct ParseResult
{
    std::optional<ExperimentConfig> config;
    std::vector<ConfigError> errors;
};

// Parses JSON text. `kind_override` (from the command line) must agree with a
// "kind" field when both are present.
ParseResult parse_config(std::string_view text, std::string_view kind_override = {});
ParseResult load_config(const std::string& path, std::string_view kind_override = {});

}  // namespace rwre::cli
