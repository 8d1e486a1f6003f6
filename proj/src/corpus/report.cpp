#include "spontts/corpus/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "spontts/error.hpp"

namespace spontts {

int nearest_rank(std::span<const int> sorted, double percentile) {
    require(!sorted.empty(), ErrorKind::Data, "percentile of an empty list");
    const double n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

DurationReport duration_distribution_report(std::span<const UtteranceRecord> corpus) {
    require(!corpus.empty(), ErrorKind::Data, "duration report needs a non-empty corpus");
    std::map<Style, std::vector<int>> values;
    for (const auto& r : corpus) {
        auto& v = values[r.style];
        v.insert(v.end(), r.durations.begin(), r.durations.end());
    }
    DurationReport report;
    for (auto& [style, v] : values) {
        std::sort(v.begin(), v.end());
        DurationSummary s;
        s.count = v.size();
        if (!v.empty()) {
            double sum = 0;
            for (int d : v) {
                sum += d;
                ++s.histogram[static_cast<std::size_t>(std::min(d, kHistogramBins - 1))];
            }
            s.mean = sum / static_cast<double>(v.size());
            s.p50 = nearest_rank(v, 50.0);
            s.p95 = nearest_rank(v, 95.0);
            s.max = v.back();
        }
        report.by_style.emplace(style, std::move(s));
    }
    return report;
}

std::string histogram_csv(const DurationReport& report) {
    std::string out = "style,bin,count\n";
    for (const auto& [style, s] : report.by_style) {
        for (int b = 0; b < kHistogramBins; ++b) {
            out += std::string(to_string(style)) + "," + (b == kHistogramBins - 1 ? "40+" : std::to_string(b)) + "," +
                   std::to_string(s.histogram[static_cast<std::size_t>(b)]) + "\n";
        }
    }
    return out;
}

std::string summary_csv(const DurationReport& report) {
    std::string out = "style,count,mean,p50,p95,max\n";
    for (const auto& [style, s] : report.by_style) {
        char mean[32];
        std::snprintf(mean, sizeof(mean), "%.4f", s.mean);
        out += std::string(to_string(style)) + "," + std::to_string(s.count) + "," + mean + "," +
               std::to_string(s.p50) + "," + std::to_string(s.p95) + "," + std::to_string(s.max) + "\n";
    }
    return out;
}

}  // namespace spontts
