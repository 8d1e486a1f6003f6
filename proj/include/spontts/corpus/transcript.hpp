#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "spontts/corpus/phonemes.hpp"

namespace spontts {

struct TranscriptToken {
    FpTag fp = FpTag::None;  // None for an ordinary word
    std::string word;        // case-folded, punctuation stripped; empty for FPs

    bool is_fp() const { return fp != FpTag::None; }
    friend bool operator==(const TranscriptToken&, const TranscriptToken&) = default;
};

// Splits one transcript line into words and inline "<uh>" / "<um>" markers.
// Any other "<...>" token is a parse error that reports line and column.
std::vector<TranscriptToken> parse_marked_text(std::string_view line, int line_number = 1);

}  // namespace spontts
