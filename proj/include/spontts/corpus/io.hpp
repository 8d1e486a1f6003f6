#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spontts/corpus/record.hpp"

namespace spontts {

// Raw little-endian float32, row-major frames x 80.
void write_mel(const std::filesystem::path& path, const MelMatrix& mel);
MelMatrix read_mel(const std::filesystem::path& path);

// A dataset directory holds records.jsonl, manifest.json and, when records
// carry audio features, mel/<id>.f32 files referenced by relative path.
inline constexpr const char* kRecordsFile = "records.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

CorpusManifest write_records(const std::filesystem::path& dir, std::string dataset,
                             std::span<const UtteranceRecord> records, std::vector<std::string> warnings = {});
// Accepts a dataset directory or a .jsonl file. Every record is validated.
std::vector<UtteranceRecord> read_records(const std::filesystem::path& path, bool load_mel = true);

CorpusManifest write_fp_records(const std::filesystem::path& dir, std::string dataset,
                                std::span<const FpRecord> records, std::vector<std::string> warnings = {});
std::vector<FpRecord> read_fp_records(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);
CorpusManifest read_manifest(const std::filesystem::path& path);

// Writes `text` to `path` through a temporary sibling and a rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace spontts
