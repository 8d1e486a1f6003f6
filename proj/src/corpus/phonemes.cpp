#include "spontts/corpus/phonemes.hpp"

#include <algorithm>
#include <cstdio>

#include "spontts/error.hpp"

namespace spontts {

namespace {
constexpr const char* kArpabet[] = {"aa", "ae", "ah", "ao", "aw", "ax", "ay", "b",  "ch", "d",  "dh", "eh", "er", "ey",
                                    "f",  "g",  "hh", "ih", "iy", "jh", "k",  "l",  "m",  "n",  "ng", "ow", "oy", "p",
                                    "r",  "s",  "sh", "t",  "th", "uh", "uw", "v",  "w",  "y",  "z",  "zh"};
constexpr int kFillerSymbols = 23;
}  // namespace

std::vector<std::string> fp_spelling(FpTag tag) {
    switch (tag) {
        case FpTag::Uh: return {"ah"};
        case FpTag::Um: return {"ah", "m"};
        case FpTag::None: break;
    }
    fail(ErrorKind::Contract, "no spelling for a non-FP tag");
}

PhonemeInventory::PhonemeInventory() {
    symbols_.emplace_back(kBosSymbol);
    for (const char* s : kArpabet) {
        symbols_.emplace_back(s);
    }
    for (int i = 0; i < kFillerSymbols; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "sy%02d", i);
        symbols_.emplace_back(buf);
    }
}

const PhonemeInventory& PhonemeInventory::standard() {
    static const PhonemeInventory inventory;
    return inventory;
}

const std::string& PhonemeInventory::symbol(int id) const {
    require(id >= 0 && id < size(), ErrorKind::Vocabulary, "phoneme id " + std::to_string(id) + " out of range");
    return symbols_[static_cast<std::size_t>(id)];
}

int PhonemeInventory::id(std::string_view symbol) const {
    auto it = std::find(symbols_.begin(), symbols_.end(), symbol);
    require(it != symbols_.end(), ErrorKind::Vocabulary, "unknown phoneme '" + std::string(symbol) + "'");
    return static_cast<int>(it - symbols_.begin());
}

bool PhonemeInventory::contains(std::string_view symbol) const {
    return std::find(symbols_.begin(), symbols_.end(), symbol) != symbols_.end();
}

std::vector<int> PhonemeInventory::ids(std::span<const std::string> symbols) const {
    std::vector<int> out;
    out.reserve(symbols.size());
    for (const auto& s : symbols) {
        out.push_back(id(s));
    }
    return out;
}

std::vector<std::string> PhonemeInventory::synthetic_alphabet(int alphabet_size) const {
    require(alphabet_size >= 2 && alphabet_size < size(), ErrorKind::Config,
            "synthetic alphabet size must be in [2, " + std::to_string(size() - 1) + "]");
    return {symbols_.begin() + 1, symbols_.begin() + 1 + alphabet_size};
}

}  // namespace spontts
