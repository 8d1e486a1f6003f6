#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace spontts {

enum class SpeedTag : std::uint8_t { Fast = 0, Medium = 1, Slow = 2 };

std::string_view to_string(SpeedTag tag);

// Tertile thresholds in frames; t1 <= t2.
struct SpeedBucketBoundaries {
    int t1 = 0;
    int t2 = 0;

    friend bool operator==(const SpeedBucketBoundaries&, const SpeedBucketBoundaries&) = default;
};

// Nearest-rank 1/3 and 2/3 percentiles: sorted[ceil(n/3)-1], sorted[ceil(2n/3)-1].
SpeedBucketBoundaries compute_speed_buckets(std::span<const int> durations);

// d <= t1 FAST, d <= t2 MEDIUM, else SLOW. When t1 == t2 the shared value
// itself is MEDIUM, so an all-equal fitting set lands in one bucket.
SpeedTag assign_speed_tag(int duration, const SpeedBucketBoundaries& b);

}  // namespace spontts
