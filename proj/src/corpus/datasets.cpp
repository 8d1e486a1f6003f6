#include "spontts/corpus/datasets.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "spontts/corpus/io.hpp"
#include "spontts/corpus/transcript.hpp"
#include "spontts/error.hpp"

namespace spontts {

namespace {

std::string merge_warning(const std::string& id, int merged) {
    return "utterance " + id + ": merged " + std::to_string(merged) + " adjacent FP token(s)";
}

}  // namespace

AdaptationDatasets build_adaptation_datasets(std::span<const UtteranceRecord> corpus, const DatasetConfig& config) {
    AdaptationDatasets out;
    std::map<std::string, std::size_t> per_speaker;
    for (const auto& r : corpus) {
        require(r.style == Style::Spontaneous, ErrorKind::Data,
                "record " + r.id + " is not spontaneous; adaptation datasets need spontaneous speech");
        validate(r);
        ++per_speaker[r.speaker];

        auto extraction = extract_fp_pair_counted(r.phonemes);
        if (extraction.merged > 0) out.fp_warnings.push_back(merge_warning(r.id, extraction.merged));
        if (count_fp(extraction.pair.tags) > 0) {
            out.spon_fp.push_back(FpRecord{r.id, r.speaker, std::move(extraction.pair)});
        }

        UtteranceRecord prosody = r;
        prosody.mel.reset();
        out.spon_rhythm.push_back(std::move(prosody));
    }
    if (out.spon_fp.empty()) {
        out.fp_warnings.emplace_back("no utterance contains a filled pause; SPON-FP is empty");
    }

    std::string target;
    if (config.timbre_speaker) {
        target = *config.timbre_speaker;
        require(per_speaker.contains(target), ErrorKind::Data, "timbre speaker " + target + " has no records");
    } else {
        std::size_t best = 0;
        for (const auto& [name, n] : per_speaker) {
            if (n > best) {
                best = n;
                target = name;
            }
        }
    }
    for (const auto& r : corpus) {
        if (out.spon_timbre.size() >= config.timbre_size) break;
        if (r.speaker == target && r.mel) out.spon_timbre.push_back(r);
    }
    if (out.spon_timbre.size() < config.timbre_size) {
        out.timbre_warnings.push_back("requested " + std::to_string(config.timbre_size) +
                                      " timbre utterances, speaker '" + target + "' has " +
                                      std::to_string(out.spon_timbre.size()));
    }
    return out;
}

DatasetManifests write_adaptation_datasets(const std::filesystem::path& out, const AdaptationDatasets& d) {
    DatasetManifests m;
    m.spon_fp = write_fp_records(out / "spon_fp", "SPON-FP", d.spon_fp, d.fp_warnings);
    m.spon_rhythm = write_records(out / "spon_rhythm", "SPON-RHYTHM", d.spon_rhythm, d.rhythm_warnings);
    m.spon_timbre = write_records(out / "spon_timbre", "SPON-TIMBRE", d.spon_timbre, d.timbre_warnings);
    return m;
}

MinedTranscripts mine_transcripts(std::span<const std::string> lines, const Lexicon& lexicon,
                                  const std::string& speaker, const std::string& id_prefix) {
    MinedTranscripts out;
    std::vector<std::string> missing;
    std::vector<std::vector<TranscriptToken>> parsed;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto tokens = parse_marked_text(lines[i], static_cast<int>(i + 1));
        if (tokens.empty()) continue;
        for (const auto& t : tokens) {
            if (!t.is_fp() && !lexicon.contains(t.word) &&
                std::find(missing.begin(), missing.end(), t.word) == missing.end()) {
                missing.push_back(t.word);
            }
        }
        parsed.push_back(std::move(tokens));
        ++out.lines;
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& w : missing) list += (list.empty() ? "" : ", ") + w;
        fail(ErrorKind::Oov, "out-of-vocabulary words: " + list);
    }
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        char id[64];
        std::snprintf(id, sizeof(id), "%s%05zu", id_prefix.c_str(), i);
        auto extraction = extract_fp_pair_counted(transcribe(parsed[i], lexicon));
        if (extraction.merged > 0) out.warnings.push_back(merge_warning(id, extraction.merged));
        if (count_fp(extraction.pair.tags) > 0) {
            out.spon_fp.push_back(FpRecord{id, speaker, std::move(extraction.pair)});
        }
    }
    if (out.spon_fp.empty()) {
        out.warnings.emplace_back("no transcript line contains a filled pause; SPON-FP is empty");
    }
    return out;
}

}  // namespace spontts
