#include "spontts/corpus/fp_pair.hpp"

#include <algorithm>

#include "spontts/error.hpp"

namespace spontts {

FpExtraction extract_fp_pair_counted(std::span<const std::string> phonemes_with_fp) {
    FpExtraction out;
    auto& pair = out.pair;
    if (!phonemes_with_fp.empty() && is_fp_symbol(phonemes_with_fp.front())) {
        pair.phonemes.emplace_back(kBosSymbol);
        pair.tags.push_back(FpTag::None);
    }
    bool previous_fp = false;
    for (const auto& symbol : phonemes_with_fp) {
        if (is_fp_symbol(symbol)) {
            if (previous_fp) {
                ++out.merged;
            } else {
                pair.tags.back() = fp_tag_of(symbol);
            }
            previous_fp = true;
            continue;
        }
        previous_fp = false;
        pair.phonemes.push_back(symbol);
        pair.tags.push_back(FpTag::None);
    }
    return out;
}

FpPair extract_fp_pair(std::span<const std::string> phonemes_with_fp) {
    return extract_fp_pair_counted(phonemes_with_fp).pair;
}

std::vector<std::string> reinsert_fp(const FpPair& pair) {
    require(pair.phonemes.size() == pair.tags.size(), ErrorKind::Data, "FP pair lengths differ");
    std::vector<std::string> out;
    out.reserve(pair.phonemes.size() + count_fp(pair.tags));
    for (std::size_t i = 0; i < pair.phonemes.size(); ++i) {
        out.push_back(pair.phonemes[i]);
        if (pair.tags[i] != FpTag::None) {
            out.emplace_back(fp_symbol(pair.tags[i]));
        }
    }
    return out;
}

std::size_t count_fp(std::span<const FpTag> tags) {
    return static_cast<std::size_t>(std::count_if(tags.begin(), tags.end(), [](FpTag t) { return t != FpTag::None; }));
}

}  // namespace spontts
