#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sixway/core/error.hpp"

namespace sixway {

struct BenchStage {
    std::string name;
    std::function<void()> run;
};

struct BenchConfig {
    int warmup = 2;
    int iterations = 5;
    int width = 0;
    int height = 0;
    std::string note;
};

struct StageTiming {
    std::string name;
    double median_ms = 0;
    double p95_ms = 0;
    std::vector<double> samples_ms;
};

struct BenchReport {
    std::vector<StageTiming> stages;
    int width = 0, height = 0, iterations = 0;
    std::string note;

    const StageTiming& stage(const std::string& name) const {
        for (const auto& s : stages)
            if (s.name == name) return s;
        fail(ErrorCode::invalid_argument, "no bench stage '" + name + "'");
    }

    nlohmann::json to_json() const {
        nlohmann::json st = nlohmann::json::array();
        for (const auto& s : stages)
            st.push_back({{"name", s.name}, {"median_ms", s.median_ms}, {"p95_ms", s.p95_ms}, {"samples_ms", s.samples_ms}});
        return {{"stages", st},
                {"resolution", {width, height}},
                {"iterations", iterations},
                {"note", note}};
    }
};

namespace detail {

// Nearest-rank percentile of a sorted sample.
inline double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

} // namespace detail

/// Times each stage `iterations` times after `warmup` untimed runs; stages run
/// one after another in the given order.
inline BenchReport bench(const std::vector<BenchStage>& stages, const BenchConfig& config) {
    require(config.warmup >= 2, ErrorCode::invalid_argument, "bench needs at least 2 warm-up iterations");
    require(config.iterations >= 5, ErrorCode::invalid_argument, "bench needs at least 5 timed iterations");
    BenchReport report{{}, config.width, config.height, config.iterations, config.note};
    for (const auto& stage : stages) {
        for (const auto& existing : report.stages)
            require(existing.name != stage.name, ErrorCode::invalid_argument, "duplicate bench stage '" + stage.name + "'");
        for (int i = 0; i < config.warmup; ++i) stage.run();
        StageTiming t{stage.name, 0, 0, {}};
        for (int i = 0; i < config.iterations; ++i) {
            const auto start = std::chrono::steady_clock::now();
            stage.run();
            const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
            t.samples_ms.push_back(std::max<double>(static_cast<double>(ns), 1.0) / 1e6);
        }
        // median as the middle element (lower middle for even counts)
        std::vector<double> sorted = t.samples_ms;
        std::sort(sorted.begin(), sorted.end());
        t.median_ms = sorted[(sorted.size() - 1) / 2];
        t.p95_ms = detail::percentile(t.samples_ms, 0.95);
        report.stages.push_back(std::move(t));
    }
    return report;
}

} // namespace sixway
