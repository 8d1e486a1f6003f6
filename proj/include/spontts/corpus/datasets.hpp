#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spontts/corpus/lexicon.hpp"
#include "spontts/corpus/record.hpp"

namespace spontts {

struct DatasetConfig {
    std::size_t timbre_size = 50;
    // Speaker for SPON-TIMBRE; defaults to the speaker with most records
    // (ties broken by name).
    std::optional<std::string> timbre_speaker;
};

struct AdaptationDatasets {
    std::vector<FpRecord> spon_fp;
    std::vector<UtteranceRecord> spon_rhythm;  // prosody only, mel dropped
    std::vector<UtteranceRecord> spon_timbre;
    std::vector<std::string> fp_warnings;
    std::vector<std::string> rhythm_warnings;
    std::vector<std::string> timbre_warnings;
};

// Requires every record to be spontaneous. FP-free utterances are left out
// of SPON-FP.
AdaptationDatasets build_adaptation_datasets(std::span<const UtteranceRecord> corpus, const DatasetConfig& config = {});

struct DatasetManifests {
    CorpusManifest spon_fp;
    CorpusManifest spon_rhythm;
    CorpusManifest spon_timbre;
};

// Writes <out>/spon_fp, <out>/spon_rhythm and <out>/spon_timbre.
DatasetManifests write_adaptation_datasets(const std::filesystem::path& out, const AdaptationDatasets& datasets);

struct MinedTranscripts {
    std::vector<FpRecord> spon_fp;
    std::vector<std::string> warnings;
    std::size_t lines = 0;
};

// Transcript lines -> SPON-FP pairs via parse, lexicon lookup and FP
// extraction. OOV words across all lines are reported together.
MinedTranscripts mine_transcripts(std::span<const std::string> lines, const Lexicon& lexicon,
                                  const std::string& speaker = "unknown", const std::string& id_prefix = "line");

}  // namespace spontts
