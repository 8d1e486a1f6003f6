#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spontts/corpus/fp_pair.hpp"
#include "spontts/numerics/tensor.hpp"

namespace spontts {

inline constexpr int kMelDim = 80;

using MelMatrix = Tensor<float>;

enum class Style { Reading, Spontaneous };

std::string_view to_string(Style style);
Style parse_style(std::string_view text);

// One aligned utterance. FPs appear in `phonemes` as "<uh>" / "<um>" tokens
// with their own duration, pitch and frames. `mel` is absent in datasets that
// carry only prosody.
struct UtteranceRecord {
    std::string id;
    std::string speaker;
    Style style = Style::Reading;
    std::vector<std::string> phonemes;
    std::vector<int> durations;
    std::vector<float> pitch;
    std::optional<MelMatrix> mel;

    int frame_count() const;
};

// Throws ErrorKind::Data naming the record and the broken invariant.
void validate(const UtteranceRecord& record);

// A SPON-FP entry.
struct FpRecord {
    std::string id;
    std::string speaker;
    FpPair pair;
};

// Counts, checksums and warnings describing one written dataset.
struct CorpusManifest {
    std::string dataset;
    std::size_t records = 0;
    std::size_t phonemes = 0;
    std::map<std::string, std::size_t> per_speaker;
    std::size_t uh = 0;
    std::size_t um = 0;
    std::map<std::string, std::string> checksums;  // relative file -> sha256
    std::vector<std::string> warnings;
};

CorpusManifest describe(std::string dataset, std::span<const UtteranceRecord> records);
CorpusManifest describe(std::string dataset, std::span<const FpRecord> records);

// Per-speaker z-scoring of pitch in place. Speakers with zero spread are
// only centred.
void normalize_pitch_per_speaker(std::span<UtteranceRecord> records);

}  // namespace spontts
