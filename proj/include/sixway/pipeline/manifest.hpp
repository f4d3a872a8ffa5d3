#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sixway/io/map_files.hpp"
#include "sixway/pipeline/config.hpp"

namespace sixway::pipeline {

/// Record of one tool invocation: the effective configuration, its hash, the
/// seeds in play and every file written. Paths are relative to the manifest's
/// directory when they live below it.
class RunManifest {
public:
    RunManifest(std::string command, const PipelineConfig& config, std::filesystem::path path)
        : command_(std::move(command)), config_(pipeline::to_json(config)), hash_(config_hash(config)), path_(std::move(path)) {
        seeds_ = {{"seed", config.seed},
                  {"procedural", config.procedural.seed},
                  {"bake", config.bake.rng_seed},
                  {"guiding_jitter", config.guiding.jitter_seed}};
    }

    void add_file(const std::filesystem::path& file) {
        const auto base = std::filesystem::absolute(path_).parent_path().lexically_normal();
        const auto abs = std::filesystem::absolute(file).lexically_normal();
        const auto rel = abs.lexically_relative(base);
        const bool inside = !rel.empty() && *rel.begin() != "..";
        files_.push_back((inside ? rel : abs).generic_string());
    }
    void add_files(const std::vector<std::filesystem::path>& files) {
        for (const auto& f : files) add_file(f);
    }
    void set_seed(const std::string& key, std::uint64_t value) { seeds_[key] = value; }
    void set_input(const std::string& key, const std::string& value) { inputs_[key] = value; }

    const std::vector<std::string>& files() const { return files_; }
    const std::filesystem::path& path() const { return path_; }

    nlohmann::json to_json() const {
        return {{"command", command_},
                {"config_hash", hex64(hash_)},
                {"config", config_},
                {"seeds", seeds_},
                {"inputs", inputs_},
                {"files", files_}};
    }

    void write() const { io::write_text(path_, to_json().dump(2) + "\n"); }

private:
    std::string command_;
    nlohmann::json config_;
    std::uint64_t hash_;
    std::filesystem::path path_;
    nlohmann::json seeds_ = nlohmann::json::object();
    nlohmann::json inputs_ = nlohmann::json::object();
    std::vector<std::string> files_;
};

} // namespace sixway::pipeline
