#include "spontts/corpus/io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spontts/error.hpp"
#include "spontts/util/hash.hpp"

namespace spontts {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path records_path(const fs::path& path) {
    return fs::is_directory(path) ? path / kRecordsFile : path;
}

std::vector<std::string> lines_of(const fs::path& file) {
    std::ifstream in(file);
    require(in.good(), ErrorKind::Io, "cannot open " + file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

json parse_line(const std::string& line, const fs::path& file, std::size_t number) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, file.string() + ":" + std::to_string(number) + ": " + e.what());
    }
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), ErrorKind::Io, "cannot write " + path.string());
        out << text;
        require(out.good(), ErrorKind::Io, "write failed for " + path.string());
    }
    fs::rename(tmp, path);
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::Io, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_mel(const fs::path& path, const MelMatrix& mel) {
    require(mel.cols() == kMelDim, ErrorKind::Dimension, "mel must have 80 columns");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(mel.data()), static_cast<std::streamsize>(mel.size() * sizeof(float)));
    require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

MelMatrix read_mel(const fs::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    require(in.good(), ErrorKind::Io, "cannot open " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    constexpr std::size_t row_bytes = kMelDim * sizeof(float);
    require(bytes % row_bytes == 0, ErrorKind::Integrity,
            path.string() + ": size " + std::to_string(bytes) + " is not a whole number of 80-dim frames");
    MelMatrix mel(static_cast<Eigen::Index>(bytes / row_bytes), kMelDim);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(mel.data()), static_cast<std::streamsize>(bytes));
    require(in.good() || bytes == 0, ErrorKind::Io, "read failed for " + path.string());
    return mel;
}

void write_manifest(const fs::path& path, const CorpusManifest& m) {
    json j;
    j["dataset"] = m.dataset;
    j["records"] = m.records;
    j["phonemes"] = m.phonemes;
    j["per_speaker"] = m.per_speaker;
    j["fp_counts"] = {{"uh", m.uh}, {"um", m.um}};
    j["checksums"] = m.checksums;
    j["warnings"] = m.warnings;
    write_text_file(path, j.dump(2) + "\n");
}

CorpusManifest read_manifest(const fs::path& path) {
    const fs::path file = fs::is_directory(path) ? path / kManifestFile : path;
    json j;
    try {
        j = json::parse(read_text_file(file));
        CorpusManifest m;
        m.dataset = j.at("dataset").get<std::string>();
        m.records = j.at("records").get<std::size_t>();
        m.phonemes = j.at("phonemes").get<std::size_t>();
        m.per_speaker = j.at("per_speaker").get<std::map<std::string, std::size_t>>();
        m.uh = j.at("fp_counts").at("uh").get<std::size_t>();
        m.um = j.at("fp_counts").at("um").get<std::size_t>();
        m.checksums = j.at("checksums").get<std::map<std::string, std::string>>();
        m.warnings = j.at("warnings").get<std::vector<std::string>>();
        return m;
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, file.string() + ": " + e.what());
    }
}

CorpusManifest write_records(const fs::path& dir, std::string dataset, std::span<const UtteranceRecord> records,
                             std::vector<std::string> warnings) {
    fs::create_directories(dir);
    CorpusManifest manifest = describe(std::move(dataset), records);
    manifest.warnings = std::move(warnings);
    std::string body;
    for (const auto& r : records) {
        validate(r);
        json j;
        j["id"] = r.id;
        j["speaker"] = r.speaker;
        j["style"] = std::string(to_string(r.style));
        j["phonemes"] = r.phonemes;
        j["durations"] = r.durations;
        std::vector<double> pitch(r.pitch.begin(), r.pitch.end());
        j["pitch"] = pitch;
        if (r.mel) {
            const std::string rel = "mel/" + r.id + ".f32";
            write_mel(dir / rel, *r.mel);
            manifest.checksums[rel] = sha256_file(dir / rel);
            j["mel"] = rel;
        } else {
            j["mel"] = nullptr;
        }
        body += j.dump() + "\n";
    }
    write_text_file(dir / kRecordsFile, body);
    manifest.checksums[kRecordsFile] = sha256_hex(body);
    write_manifest(dir / kManifestFile, manifest);
    return manifest;
}

std::vector<UtteranceRecord> read_records(const fs::path& path, bool load_mel) {
    const fs::path file = records_path(path);
    const fs::path base = file.parent_path();
    std::vector<UtteranceRecord> out;
    const auto lines = lines_of(file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const json j = parse_line(lines[i], file, i + 1);
        UtteranceRecord r;
        try {
            r.id = j.at("id").get<std::string>();
            r.speaker = j.at("speaker").get<std::string>();
            r.style = parse_style(j.at("style").get<std::string>());
            r.phonemes = j.at("phonemes").get<std::vector<std::string>>();
            r.durations = j.at("durations").get<std::vector<int>>();
            for (double p : j.at("pitch").get<std::vector<double>>()) r.pitch.push_back(static_cast<float>(p));
            if (load_mel && j.contains("mel") && !j["mel"].is_null()) {
                r.mel = read_mel(base / j["mel"].get<std::string>());
            }
        } catch (const json::exception& e) {
            fail(ErrorKind::Parse, file.string() + ":" + std::to_string(i + 1) + ": " + e.what());
        }
        validate(r);
        out.push_back(std::move(r));
    }
    return out;
}

CorpusManifest write_fp_records(const fs::path& dir, std::string dataset, std::span<const FpRecord> records,
                                std::vector<std::string> warnings) {
    fs::create_directories(dir);
    CorpusManifest manifest = describe(std::move(dataset), records);
    manifest.warnings = std::move(warnings);
    std::string body;
    for (const auto& r : records) {
        require(r.pair.phonemes.size() == r.pair.tags.size(), ErrorKind::Data, "FP pair lengths differ in " + r.id);
        json j;
        j["id"] = r.id;
        j["speaker"] = r.speaker;
        j["phonemes"] = r.pair.phonemes;
        std::vector<int> tags;
        for (FpTag t : r.pair.tags) tags.push_back(static_cast<int>(t));
        j["tags"] = tags;
        body += j.dump() + "\n";
    }
    write_text_file(dir / kRecordsFile, body);
    manifest.checksums[kRecordsFile] = sha256_hex(body);
    write_manifest(dir / kManifestFile, manifest);
    return manifest;
}

std::vector<FpRecord> read_fp_records(const fs::path& path) {
    const fs::path file = records_path(path);
    std::vector<FpRecord> out;
    const auto lines = lines_of(file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const json j = parse_line(lines[i], file, i + 1);
        FpRecord r;
        try {
            r.id = j.at("id").get<std::string>();
            r.speaker = j.value("speaker", std::string{});
            r.pair.phonemes = j.at("phonemes").get<std::vector<std::string>>();
            for (int t : j.at("tags").get<std::vector<int>>()) {
                require(t >= 0 && t <= 2, ErrorKind::Data, file.string() + ":" + std::to_string(i + 1) +
                                                               ": FP tag " + std::to_string(t) + " outside {0,1,2}");
                r.pair.tags.push_back(static_cast<FpTag>(t));
            }
        } catch (const json::exception& e) {
            fail(ErrorKind::Parse, file.string() + ":" + std::to_string(i + 1) + ": " + e.what());
        }
        require(r.pair.phonemes.size() == r.pair.tags.size(), ErrorKind::Data,
                file.string() + ":" + std::to_string(i + 1) + ": phoneme and tag counts differ");
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace spontts
