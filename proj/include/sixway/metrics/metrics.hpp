#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sixway/core/image.hpp"

namespace sixway {

inline constexpr double kPsnrCap = 99.0;

/// Mean over all pixels and channels of the squared difference. Inputs are
/// expected to be sRGB-encoded values in [0, 1].
inline double mse(const Image& a, const Image& b) {
    require(a.same_shape(b), ErrorCode::dimension_mismatch,
            "mse operands " + std::to_string(a.width()) + "x" + std::to_string(a.height()) + "x" +
                std::to_string(a.channels()) + " vs " + std::to_string(b.width()) + "x" +
                std::to_string(b.height()) + "x" + std::to_string(b.channels()));
    if (a.data().empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double d = static_cast<double>(a.data()[i]) - b.data()[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.data().size());
}

/// Peak 1.0; exact matches report the cap.
inline double psnr_from_mse(double m) { return m > 0.0 ? std::min(kPsnrCap, -10.0 * std::log10(m)) : kPsnrCap; }

inline double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

struct FrameMetric {
    std::string label;
    double mse = 0;
    double psnr = 0;
};

struct MetricReport {
    std::vector<FrameMetric> frames;

    void add(std::string label, const Image& a, const Image& b) {
        const double m = mse(a, b);
        frames.push_back({std::move(label), m, psnr_from_mse(m)});
    }

    struct Summary {
        double avg = 0, max = 0, min = 0;
    };
    Summary summarize(double FrameMetric::*field) const {
        Summary s;
        if (frames.empty()) return s;
        s.max = s.min = frames.front().*field;
        for (const auto& f : frames) {
            s.avg += f.*field;
            s.max = std::max(s.max, f.*field);
            s.min = std::min(s.min, f.*field);
        }
        s.avg /= static_cast<double>(frames.size());
        return s;
    }

    nlohmann::json to_json() const {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& f : frames) rows.push_back({{"label", f.label}, {"mse", f.mse}, {"psnr", f.psnr}});
        const auto p = summarize(&FrameMetric::psnr), m = summarize(&FrameMetric::mse);
        return {{"frames", rows},
                {"psnr", {{"avg", p.avg}, {"max", p.max}, {"min", p.min}}},
                {"mse", {{"avg", m.avg}, {"max", m.max}, {"min", m.min}}}};
    }

    std::string to_csv() const {
        std::ostringstream out;
        out.precision(9);
        out << "label,mse,psnr\n";
        for (const auto& f : frames) out << f.label << ',' << f.mse << ',' << f.psnr << '\n';
        return out.str();
    }
};

} // namespace sixway
