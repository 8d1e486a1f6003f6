#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spontts {

enum class FpTag : std::uint8_t { None = 0, Uh = 1, Um = 2 };

inline constexpr std::string_view kBosSymbol = "BOS";
inline constexpr std::string_view kUhSymbol = "<uh>";
inline constexpr std::string_view kUmSymbol = "<um>";

inline bool is_fp_symbol(std::string_view s) { return s == kUhSymbol || s == kUmSymbol; }
inline FpTag fp_tag_of(std::string_view s) {
    return s == kUhSymbol ? FpTag::Uh : (s == kUmSymbol ? FpTag::Um : FpTag::None);
}
inline std::string_view fp_symbol(FpTag tag) { return tag == FpTag::Um ? kUmSymbol : kUhSymbol; }

// Fixed phoneme spellings of the filled pauses: uh = [ah], um = [ah m].
std::vector<std::string> fp_spelling(FpTag tag);

// The model vocabulary: BOS, the 40 ARPAbet symbols (stress-free, lower
// case, including "ax"), then deterministic filler symbols sy00.. that the
// synthetic generator uses once the ARPAbet list is exhausted.
class PhonemeInventory {
public:
    static const PhonemeInventory& standard();

    int size() const { return static_cast<int>(symbols_.size()); }
    const std::string& symbol(int id) const;
    int id(std::string_view symbol) const;  // throws ErrorKind::Vocabulary
    bool contains(std::string_view symbol) const;
    std::vector<int> ids(std::span<const std::string> symbols) const;
    // Symbols a synthetic corpus of `alphabet_size` draws from (BOS excluded).
    std::vector<std::string> synthetic_alphabet(int alphabet_size) const;
    std::span<const std::string> symbols() const { return symbols_; }

private:
    PhonemeInventory();
    std::vector<std::string> symbols_;
};

}  // namespace spontts
