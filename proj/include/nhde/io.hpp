#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nhde/hga.hpp"
#include "nhde/inference.hpp"
#include "nhde/pareto.hpp"
#include "nhde/problems.hpp"
#include "nhde/scalarization.hpp"

namespace nhde {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::json to_json(Instance const& inst);
// Throws IoError naming the offending field.
Instance instance_from_json(nlohmann::json const& j);

// One instance per line.
void save_instances(std::filesystem::path const& path, std::vector<Instance> const& instances);
std::vector<Instance> load_instances(std::filesystem::path const& path);

struct FrontRow {
    ObjectiveVector f; // reported sense (MOKP positive)
    std::string solution;
};

// Header f1..fM[,solution]; objective values in the reported sense.
void save_front(std::filesystem::path const& path, ProblemKind kind, std::vector<ArchiveEntry> const& entries);
void save_front(std::filesystem::path const& path, std::vector<FrontRow> const& rows);
std::vector<FrontRow> load_front(std::filesystem::path const& path);

void save_weights(std::filesystem::path const& path, PreferenceSchedule const& schedule);
PreferenceSchedule load_weights(std::filesystem::path const& path);

struct Checkpoint {
    Model model;
    std::string variant; // "nhde-p", "nhde-m" or "nhde-m-submodel"
    std::uint64_t seed = 0;
    std::vector<std::string> lineage; // how the parameters came to be, oldest first
    nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(ModelConfig const& cfg);
ModelConfig model_config_from_json(nlohmann::json const& j);

void save_checkpoint(std::filesystem::path const& path, Checkpoint const& ckpt);
Checkpoint load_checkpoint(std::filesystem::path const& path);

void save_trace(std::filesystem::path const& path, std::vector<TraceRow> const& trace);
void save_json(std::filesystem::path const& path, nlohmann::json const& j);
nlohmann::json load_json(std::filesystem::path const& path);

// Writes to a sibling temporary file and renames it into place, so a failed
// run never leaves a partial artifact behind.
void write_atomic(std::filesystem::path const& path, std::string const& content);

} // namespace nhde
