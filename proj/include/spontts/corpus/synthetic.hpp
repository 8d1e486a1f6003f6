#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spontts/corpus/record.hpp"

namespace spontts {

// Generator settings. The "world" (phoneme spectra, duration tables, pitch
// codes, speaker traits) depends only on world_seed and alphabet_size, so a
// reading corpus and a spontaneous corpus built with different corpus seeds
// describe the same language and the same voices.
struct SyntheticConfig {
    Style style = Style::Reading;
    int utterances = 32;
    int alphabet_size = 24;
    int speaker_count = 4;
    std::vector<std::string> speakers;  // overrides speaker_count when non-empty
    int min_length = 12;
    int max_length = 20;
    double fp_rate = -1.0;  // FP tokens per phoneme; negative selects the style default
    double um_fraction = 338.0 / 2952.0;
    int designated_period = 3;  // alphabet index % period == 0 is the designated class
    double designated_strength = 0.95;  // share of FPs that follow a designated phoneme
    std::uint64_t world_seed = 2021;
    std::string id_prefix = "utt";
};

inline constexpr double kDefaultSpontaneousFpRate = 0.05;

double effective_fp_rate(const SyntheticConfig& config);
std::vector<std::string> speaker_names(const SyntheticConfig& config);

// True when `symbol` belongs to the designated (FP-attracting) class.
bool is_designated(const SyntheticConfig& config, const std::string& symbol);

// Reading style: per-symbol means are stratified Gamma(2.5, 3) quantiles
// with small multiplicative jitter, clipped to [1, 25]. Spontaneous style:
// per-symbol means spread evenly over [1, 40] with small additive jitter.
// Raw pitch is a speaker Gaussian over a per-symbol code and a declining
// contour. Mel frames are a smooth per-phoneme spectrum plus a pitch
// direction, a speaker offset and N(0, 0.01^2) noise.
std::vector<UtteranceRecord> generate_synthetic_corpus(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace spontts
