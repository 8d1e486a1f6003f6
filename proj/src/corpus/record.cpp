#include "spontts/corpus/record.hpp"

#include <cmath>
#include <numeric>

#include "spontts/error.hpp"

namespace spontts {

std::string_view to_string(Style style) { return style == Style::Reading ? "reading" : "spontaneous"; }

Style parse_style(std::string_view text) {
    if (text == "reading") return Style::Reading;
    if (text == "spontaneous") return Style::Spontaneous;
    fail(ErrorKind::Parse, "unknown style '" + std::string(text) + "'");
}

int UtteranceRecord::frame_count() const { return std::accumulate(durations.begin(), durations.end(), 0); }

void validate(const UtteranceRecord& r) {
    const std::string where = "record " + r.id + ": ";
    require(!r.id.empty(), ErrorKind::Data, "record without id");
    require(!r.phonemes.empty(), ErrorKind::Data, where + "no phonemes");
    require(r.durations.size() == r.phonemes.size(), ErrorKind::Data,
            where + std::to_string(r.durations.size()) + " durations for " + std::to_string(r.phonemes.size()) +
                " phonemes");
    require(r.pitch.size() == r.phonemes.size(), ErrorKind::Data,
            where + std::to_string(r.pitch.size()) + " pitch values for " + std::to_string(r.phonemes.size()) +
                " phonemes");
    for (int d : r.durations) {
        require(d >= 0, ErrorKind::Data, where + "negative duration");
    }
    for (float p : r.pitch) {
        require(std::isfinite(p), ErrorKind::Data, where + "non-finite pitch");
    }
    const auto& inventory = PhonemeInventory::standard();
    for (const auto& s : r.phonemes) {
        require(is_fp_symbol(s) || inventory.contains(s), ErrorKind::Data, where + "unknown phoneme '" + s + "'");
    }
    if (r.mel) {
        require(r.mel->cols() == kMelDim, ErrorKind::Data, where + "mel must have 80 columns");
        require(r.mel->rows() == r.frame_count(), ErrorKind::Data,
                where + "duration sum " + std::to_string(r.frame_count()) + " != mel frames " +
                    std::to_string(r.mel->rows()));
        require(r.mel->allFinite(), ErrorKind::Data, where + "non-finite mel value");
    }
}

CorpusManifest describe(std::string dataset, std::span<const UtteranceRecord> records) {
    CorpusManifest m;
    m.dataset = std::move(dataset);
    m.records = records.size();
    for (const auto& r : records) {
        ++m.per_speaker[r.speaker];
        for (const auto& s : r.phonemes) {
            const FpTag t = fp_tag_of(s);
            if (t == FpTag::Uh) {
                ++m.uh;
            } else if (t == FpTag::Um) {
                ++m.um;
            } else {
                ++m.phonemes;
            }
        }
    }
    return m;
}

CorpusManifest describe(std::string dataset, std::span<const FpRecord> records) {
    CorpusManifest m;
    m.dataset = std::move(dataset);
    m.records = records.size();
    for (const auto& r : records) {
        ++m.per_speaker[r.speaker];
        m.phonemes += r.pair.phonemes.size();
        for (FpTag t : r.pair.tags) {
            m.uh += t == FpTag::Uh;
            m.um += t == FpTag::Um;
        }
    }
    return m;
}

void normalize_pitch_per_speaker(std::span<UtteranceRecord> records) {
    struct Moments {
        double sum = 0, sq = 0;
        std::size_t n = 0;
    };
    std::map<std::string, Moments> stats;
    for (const auto& r : records) {
        auto& s = stats[r.speaker];
        for (float p : r.pitch) {
            s.sum += p;
            s.sq += static_cast<double>(p) * p;
            ++s.n;
        }
    }
    for (auto& r : records) {
        const auto& s = stats[r.speaker];
        if (s.n == 0) continue;
        const double mean = s.sum / static_cast<double>(s.n);
        const double var = std::max(0.0, s.sq / static_cast<double>(s.n) - mean * mean);
        const double sd = std::sqrt(var);
        for (float& p : r.pitch) {
            p = static_cast<float>(sd > 1e-8 ? (p - mean) / sd : p - mean);
        }
    }
}

}  // namespace spontts
