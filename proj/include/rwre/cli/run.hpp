#pragma once

#include <map>
#include <string>

#include "rwre/cli/config.hpp"

namespace rwre::cli
{

// Library version baked into manifests.
std::string_view version();

/*!
 * In-memory result of one experiment: file name -> contents, plus the JSON
 * summary (also present in `files` as summary.json).
 */
struct RunOutput
{
    std::map<std::string, std::string> files;
    Json summary;
};

struct RunManifest
{
    std::string config_hash;
    std::string version;
    double wall_seconds = 0;
    std::map<std::string, std::string> digests;  // file -> sha256 hex
};

// Seed handed to the k-th module call of an experiment of the given kind.
std::uint64_t kind_seed(const ExperimentConfig& cfg, std::uint64_t k);

// Runs the experiment without touching the file system.
RunOutput execute(const ExperimentConfig& cfg);

// Runs the experiment and writes every artifact plus manifest.json into
// cfg.output_dir (created if needed).
RunManifest run(const ExperimentConfig& cfg);

std::string sha256_hex(std::string_view data);

}  // namespace rwre::cli
