#pragma once

#include <span>
#include <string>
#include <vector>

#include "spontts/corpus/phonemes.hpp"

namespace spontts {

// Phonemes with filled pauses removed, plus one tag per remaining phoneme
// naming the FP that followed it.
struct FpPair {
    std::vector<std::string> phonemes;
    std::vector<FpTag> tags;

    friend bool operator==(const FpPair&, const FpPair&) = default;
};

struct FpExtraction {
    FpPair pair;
    int merged = 0;  // FP tokens dropped because they directly followed another FP
};

// FP tokens ("<uh>", "<um>") are removed and their type is written onto the
// phoneme before them. A sequence that opens with an FP gains a leading BOS
// to carry it. Of several adjacent FPs only the first is kept.
FpExtraction extract_fp_pair_counted(std::span<const std::string> phonemes_with_fp);
FpPair extract_fp_pair(std::span<const std::string> phonemes_with_fp);

// Inverse of extract_fp_pair: an FP token after each tagged phoneme.
std::vector<std::string> reinsert_fp(const FpPair& pair);

std::size_t count_fp(std::span<const FpTag> tags);

}  // namespace spontts
