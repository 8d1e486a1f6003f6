#include "spontts/corpus/transcript.hpp"

#include <cctype>

#include "spontts/error.hpp"

namespace spontts {

namespace {

std::string fold_word(std::string_view raw) {
    std::string out;
    for (char ch : raw) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || ch == '\'' || c >= 0x80) {
            out.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    // apostrophes only survive inside a word ("it's"), not as quotes
    const auto first = out.find_first_not_of('\'');
    if (first == std::string::npos) {
        return {};
    }
    const auto last = out.find_last_not_of('\'');
    return out.substr(first, last - first + 1);
}

}  // namespace

std::vector<TranscriptToken> parse_marked_text(std::string_view line, int line_number) {
    std::vector<TranscriptToken> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) {
            ++pos;
        }
        if (pos >= line.size()) {
            break;
        }
        const std::size_t start = pos;
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) {
            ++pos;
        }
        std::string_view raw = line.substr(start, pos - start);
        const auto open = raw.find('<');
        if (open != std::string_view::npos) {
            const auto close = raw.find('>', open);
            const std::string where = "line " + std::to_string(line_number) + ", column " +
                                      std::to_string(start + open + 1);
            require(close != std::string_view::npos, ErrorKind::Parse, "unterminated marker at " + where);
            std::string marker(raw.substr(open, close - open + 1));
            for (auto& ch : marker) {
                ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            }
            const FpTag tag = fp_tag_of(marker);
            require(tag != FpTag::None, ErrorKind::Parse, "unknown marker " + marker + " at " + where);
            // punctuation glued to a marker ("<um>,") is dropped like any other
            require(fold_word(raw.substr(0, open)).empty() && fold_word(raw.substr(close + 1)).empty(),
                    ErrorKind::Parse, "marker must stand between words at " + where);
            tokens.push_back(TranscriptToken{tag, {}});
            continue;
        }
        std::string word = fold_word(raw);
        if (!word.empty()) {
            tokens.push_back(TranscriptToken{FpTag::None, std::move(word)});
        }
    }
    return tokens;
}

}  // namespace spontts
