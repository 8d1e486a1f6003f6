#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spontts/corpus/transcript.hpp"

namespace spontts {

// Word -> phoneme pronunciation dictionary.
//
// Files use the CMUdict layout ("WORD  PH1 PH2 ..."). Stress digits are
// dropped, and an unstressed AH0 becomes "ax" so entries match the reduced
// vowel the inventory uses. Alternate pronunciations "WORD(2)" are ignored.
class Lexicon {
public:
    Lexicon() = default;

    static Lexicon bundled();
    static Lexicon load(const std::filesystem::path& path);
    static Lexicon parse(std::string_view text, std::string_view origin = "<memory>");

    void add(std::string word, std::vector<std::string> phonemes);
    bool contains(std::string_view word) const { return entries_.contains(std::string(word)); }
    std::size_t size() const { return entries_.size(); }

    // Throws ErrorKind::Oov for unknown or empty words.
    const std::vector<std::string>& lookup(std::string_view word) const;

private:
    std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

std::vector<std::string> g2p_lookup(std::string_view word, const Lexicon& lexicon);
std::vector<std::string> g2p_lookup(const TranscriptToken& token, const Lexicon& lexicon);

// Phoneme sequence for a parsed line with each FP kept as one token symbol.
// Every out-of-vocabulary word is collected into a single OOV error.
std::vector<std::string> transcribe(std::span<const TranscriptToken> tokens, const Lexicon& lexicon);

}  // namespace spontts
