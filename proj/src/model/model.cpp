#include "spontts/model/model.hpp"

namespace spontts {

template class AcousticModel<float>;
template class AcousticModel<double>;

std::vector<int> phoneme_ids_with_bos(std::span<const std::string> symbols) {
    const auto& inv = PhonemeInventory::standard();
    std::vector<int> ids;
    if (symbols.empty() || symbols.front() != kBosSymbol) ids.push_back(0);
    for (const auto& s : symbols) ids.push_back(inv.id(s));
    return ids;
}

TrainingExample make_example(const UtteranceRecord& record, int speaker) {
    validate(record);
    const auto& inv = PhonemeInventory::standard();
    TrainingExample ex;
    ex.id = record.id;
    ex.speaker = speaker;
    ex.mel = record.mel;
    if (record.phonemes.front() != kBosSymbol) {
        ex.phoneme_ids.push_back(0);
        ex.tags.push_back(FpTag::None);
        ex.durations.push_back(0);
        ex.pitch.push_back(0.0f);
    }
    bool previous_fp = false;
    for (std::size_t i = 0; i < record.phonemes.size(); ++i) {
        const auto& s = record.phonemes[i];
        if (is_fp_symbol(s)) {
            if (previous_fp) {
                ex.durations.back() += record.durations[i];
            } else {
                ex.tags.back() = fp_tag_of(s);
                ex.durations.push_back(record.durations[i]);
                ex.pitch.push_back(record.pitch[i]);
            }
            previous_fp = true;
            continue;
        }
        previous_fp = false;
        ex.phoneme_ids.push_back(inv.id(s));
        ex.tags.push_back(FpTag::None);
        ex.durations.push_back(record.durations[i]);
        ex.pitch.push_back(record.pitch[i]);
    }
    return ex;
}

TrainingExample make_example(const FpRecord& record, int speaker) {
    require(record.pair.phonemes.size() == record.pair.tags.size(), ErrorKind::Data,
            record.id + ": phoneme and tag counts differ");
    const auto& inv = PhonemeInventory::standard();
    TrainingExample ex;
    ex.id = record.id;
    ex.speaker = speaker;
    if (record.pair.phonemes.empty() || record.pair.phonemes.front() != kBosSymbol) {
        ex.phoneme_ids.push_back(0);
        ex.tags.push_back(FpTag::None);
    }
    for (std::size_t i = 0; i < record.pair.phonemes.size(); ++i) {
        ex.phoneme_ids.push_back(inv.id(record.pair.phonemes[i]));
        ex.tags.push_back(record.pair.tags[i]);
    }
    return ex;
}

}  // namespace spontts
