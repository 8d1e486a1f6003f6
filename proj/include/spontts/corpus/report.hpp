#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "spontts/corpus/record.hpp"

namespace spontts {

inline constexpr int kHistogramBins = 41;  // 0..39, then "40+"

struct DurationSummary {
    std::size_t count = 0;
    double mean = 0.0;
    int p50 = 0;
    int p95 = 0;
    int max = 0;
    std::vector<std::size_t> histogram = std::vector<std::size_t>(kHistogramBins, 0);
};

// Per-style duration statistics over every phoneme and FP token.
// Percentiles are nearest-rank.
struct DurationReport {
    std::map<Style, DurationSummary> by_style;
};

DurationReport duration_distribution_report(std::span<const UtteranceRecord> corpus);

int nearest_rank(std::span<const int> sorted, double percentile);

// "style,bin,count" with LF endings; the last bin is labelled "40+".
std::string histogram_csv(const DurationReport& report);
// "style,count,mean,p50,p95,max".
std::string summary_csv(const DurationReport& report);

}  // namespace spontts
