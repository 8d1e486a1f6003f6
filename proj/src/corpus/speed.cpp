#include "spontts/corpus/speed.hpp"

#include <algorithm>
#include <vector>

#include "spontts/error.hpp"

namespace spontts {

std::string_view to_string(SpeedTag tag) {
    switch (tag) {
        case SpeedTag::Fast: return "fast";
        case SpeedTag::Medium: return "medium";
        case SpeedTag::Slow: return "slow";
    }
    return "unknown";
}

SpeedBucketBoundaries compute_speed_buckets(std::span<const int> durations) {
    require(!durations.empty(), ErrorKind::Data, "speed buckets need at least one duration");
    std::vector<int> sorted(durations.begin(), durations.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const std::size_t r1 = (n + 2) / 3;
    const std::size_t r2 = (2 * n + 2) / 3;
    return {sorted[r1 - 1], sorted[r2 - 1]};
}

SpeedTag assign_speed_tag(int duration, const SpeedBucketBoundaries& b) {
    if (b.t1 == b.t2) {
        if (duration < b.t1) return SpeedTag::Fast;
        return duration == b.t1 ? SpeedTag::Medium : SpeedTag::Slow;
    }
    if (duration <= b.t1) return SpeedTag::Fast;
    if (duration <= b.t2) return SpeedTag::Medium;
    return SpeedTag::Slow;
}

}  // namespace spontts
