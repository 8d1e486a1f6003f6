#include "spontts/corpus/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>

#include "spontts/error.hpp"

namespace spontts {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

template <typename T>
T clamp_round(double x, T lo, T hi) {
    return static_cast<T>(std::clamp(std::lround(x), static_cast<long>(lo), static_cast<long>(hi)));
}

struct SpeakerTraits {
    double pitch_mean;
    double pitch_sd;
    Eigen::RowVectorXf offset;
};

struct World {
    int inventory_size;
    std::vector<Eigen::RowVectorXf> spectrum;  // by inventory id
    std::vector<double> pitch_code;             // by inventory id
    std::vector<double> reading_mean;           // by alphabet index
    std::vector<double> spontaneous_mean;       // by alphabet index
    Eigen::RowVectorXf pitch_direction;
};

World build_world(std::uint64_t world_seed, int alphabet_size) {
    const auto& inv = PhonemeInventory::standard();
    std::mt19937_64 rng(world_seed);
    World w;
    w.inventory_size = inv.size();
    std::uniform_real_distribution<double> centre(0.0, kMelDim), width(3.0, 10.0), amp(0.4, 1.0), code(-1.0, 1.0);
    for (int id = 0; id < inv.size(); ++id) {
        Eigen::RowVectorXf e = Eigen::RowVectorXf::Constant(kMelDim, -0.5f);
        for (int k = 0; k < 3; ++k) {
            const double c = centre(rng), wd = width(rng), a = amp(rng);
            for (int b = 0; b < kMelDim; ++b) {
                const double u = (b - c) / wd;
                e[b] += static_cast<float>(a * std::exp(-0.5 * u * u));
            }
        }
        w.spectrum.push_back(std::move(e));
        w.pitch_code.push_back(code(rng));
    }
    w.pitch_direction.resize(kMelDim);
    for (int b = 0; b < kMelDim; ++b) {
        const double u = (b - 10.0) / 8.0;
        w.pitch_direction[b] = static_cast<float>(0.15 * std::exp(-u * u));
    }

    const auto n = static_cast<std::size_t>(alphabet_size);
    std::gamma_distribution<double> gamma(2.5, 3.0);
    std::vector<double> draws(20000);
    for (auto& d : draws) d = gamma(rng);
    std::sort(draws.begin(), draws.end());
    std::vector<std::size_t> rank(n);
    std::iota(rank.begin(), rank.end(), 0);
    std::shuffle(rank.begin(), rank.end(), rng);
    w.reading_mean.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double q = (static_cast<double>(rank[i]) + 0.5) / static_cast<double>(n);
        const double v = draws[static_cast<std::size_t>(q * static_cast<double>(draws.size()))];
        w.reading_mean[i] = std::clamp(v, 2.0, 22.0);
    }
    std::shuffle(rank.begin(), rank.end(), rng);
    w.spontaneous_mean.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        w.spontaneous_mean[i] = 1.0 + 39.0 * (static_cast<double>(rank[i]) + 0.5) / static_cast<double>(n);
    }
    return w;
}

SpeakerTraits speaker_traits(std::uint64_t world_seed, const std::string& name) {
    std::mt19937_64 rng(world_seed ^ fnv1a(name));
    std::uniform_real_distribution<double> mean(4.6, 5.4), sd(0.1, 0.25), freq(0.5, 2.0),
        phase(0.0, 2.0 * std::numbers::pi);
    SpeakerTraits t;
    t.pitch_mean = mean(rng);
    t.pitch_sd = sd(rng);
    const double f = freq(rng), ph = phase(rng);
    t.offset.resize(kMelDim);
    for (int b = 0; b < kMelDim; ++b) {
        t.offset[b] = static_cast<float>(0.2 * std::sin(2.0 * std::numbers::pi * f * b / kMelDim + ph));
    }
    return t;
}

void check_config(const SyntheticConfig& c) {
    require(c.utterances >= 1, ErrorKind::Config, "synthetic corpus needs at least one utterance");
    require(c.min_length >= 1 && c.max_length >= c.min_length, ErrorKind::Config,
            "utterance length bounds must satisfy 1 <= min <= max");
    require(c.speakers.empty() ? c.speaker_count >= 1 : true, ErrorKind::Config, "need at least one speaker");
    require(c.designated_period >= 1, ErrorKind::Config, "designated period must be >= 1");
    const double rate = effective_fp_rate(c);
    require(rate >= 0.0 && rate <= 1.0, ErrorKind::Config, "fp_rate must lie in [0, 1]");
    require(c.um_fraction >= 0.0 && c.um_fraction <= 1.0, ErrorKind::Config, "um_fraction must lie in [0, 1]");
    require(c.designated_strength >= 0.0 && c.designated_strength <= 1.0, ErrorKind::Config,
            "designated_strength must lie in [0, 1]");
}

}  // namespace

double effective_fp_rate(const SyntheticConfig& c) {
    if (c.fp_rate >= 0.0) return c.fp_rate;
    return c.style == Style::Spontaneous ? kDefaultSpontaneousFpRate : 0.0;
}

std::vector<std::string> speaker_names(const SyntheticConfig& c) {
    if (!c.speakers.empty()) return c.speakers;
    std::vector<std::string> out;
    for (int i = 0; i < c.speaker_count; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "spk%02d", i);
        out.emplace_back(buf);
    }
    return out;
}

bool is_designated(const SyntheticConfig& c, const std::string& symbol) {
    const auto alphabet = PhonemeInventory::standard().synthetic_alphabet(c.alphabet_size);
    auto it = std::find(alphabet.begin(), alphabet.end(), symbol);
    return it != alphabet.end() && (it - alphabet.begin()) % c.designated_period == 0;
}

std::vector<UtteranceRecord> generate_synthetic_corpus(const SyntheticConfig& c, std::uint64_t seed) {
    check_config(c);
    const auto& inv = PhonemeInventory::standard();
    const auto alphabet = inv.synthetic_alphabet(c.alphabet_size);
    const World world = build_world(c.world_seed, c.alphabet_size);
    const auto names = speaker_names(c);

    const double rate = effective_fp_rate(c);
    int designated_count = 0;
    for (int i = 0; i < c.alphabet_size; ++i) designated_count += i % c.designated_period == 0;
    const double dfrac = static_cast<double>(designated_count) / c.alphabet_size;
    const double p_designated = rate > 0 ? rate * c.designated_strength / dfrac : 0.0;
    const double p_other = rate > 0 && dfrac < 1.0 ? rate * (1.0 - c.designated_strength) / (1.0 - dfrac) : 0.0;
    require(p_designated <= 1.0 && p_other <= 1.0, ErrorKind::Config,
            "fp_rate too high for the designated-class split (per-position probability exceeds 1)");

    std::vector<SpeakerTraits> traits;
    for (const auto& n : names) traits.push_back(speaker_traits(c.world_seed, n));

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> length(c.min_length, c.max_length);
    std::uniform_int_distribution<int> pick(0, c.alphabet_size - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int uh_id = inv.id("ah"), um_id = inv.id("m");
    const Eigen::RowVectorXf um_spectrum = 0.5f * (world.spectrum[uh_id] + world.spectrum[um_id]);

    std::vector<UtteranceRecord> out;
    out.reserve(static_cast<std::size_t>(c.utterances));
    for (int u = 0; u < c.utterances; ++u) {
        const std::size_t s = static_cast<std::size_t>(u) % names.size();
        UtteranceRecord r;
        char id[64];
        std::snprintf(id, sizeof(id), "%s%05d", c.id_prefix.c_str(), u);
        r.id = id;
        r.speaker = names[s];
        r.style = c.style;
        std::vector<double> z;
        std::vector<const Eigen::RowVectorXf*> spectra;
        const int len = length(rng);
        for (int j = 0; j < len; ++j) {
            const int a = pick(rng);
            const int sym = inv.id(alphabet[static_cast<std::size_t>(a)]);
            int d;
            if (c.style == Style::Reading) {
                d = clamp_round(world.reading_mean[a] * std::exp(0.08 * gauss(rng)), 1, 25);
            } else {
                d = clamp_round(world.spontaneous_mean[a] + 0.6 * gauss(rng), 1, 40);
            }
            r.phonemes.push_back(alphabet[static_cast<std::size_t>(a)]);
            r.durations.push_back(d);
            z.push_back(0.8 * world.pitch_code[sym] + 0.4 * (0.5 - static_cast<double>(j) / len) +
                        0.05 * gauss(rng));
            spectra.push_back(&world.spectrum[sym]);

            const double p = a % c.designated_period == 0 ? p_designated : p_other;
            if (p > 0.0 && unit(rng) < p) {
                const bool um = unit(rng) < c.um_fraction;
                r.phonemes.emplace_back(um ? kUmSymbol : kUhSymbol);
                r.durations.push_back(clamp_round((um ? 18.0 : 12.0) + gauss(rng), 1, 40));
                z.push_back(-0.6 + 0.05 * gauss(rng));
                spectra.push_back(um ? &um_spectrum : &world.spectrum[uh_id]);
            }
        }
        const auto& t = traits[s];
        MelMatrix mel(r.frame_count(), kMelDim);
        Eigen::Index f = 0;
        for (std::size_t k = 0; k < r.phonemes.size(); ++k) {
            r.pitch.push_back(static_cast<float>(t.pitch_mean + t.pitch_sd * z[k]));
            const Eigen::RowVectorXf base =
                *spectra[k] + static_cast<float>(z[k]) * world.pitch_direction + t.offset;
            for (int n = 0; n < r.durations[k]; ++n, ++f) {
                for (int b = 0; b < kMelDim; ++b) {
                    mel(f, b) = base[b] + static_cast<float>(0.01 * gauss(rng));
                }
            }
        }
        r.mel = std::move(mel);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace spontts
