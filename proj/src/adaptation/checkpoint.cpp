#include "spontts/adaptation/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>

#include "spontts/corpus/io.hpp"
#include "spontts/error.hpp"
#include "spontts/util/hash.hpp"

namespace spontts {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::span<const std::byte> tensor_bytes(const Tensor<float>& t) {
    return {reinterpret_cast<const std::byte*>(t.data()), static_cast<std::size_t>(t.size()) * sizeof(float)};
}

TensorEntry append(std::string& blob, const std::string& name, const Tensor<float>& t) {
    const auto bytes = tensor_bytes(t);
    TensorEntry e{name, t.rows(), t.cols(), blob.size(), bytes.size(), sha256_hex(bytes)};
    blob.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    return e;
}

json entry_json(const TensorEntry& e) {
    return {{"name", e.name}, {"shape", {e.rows, e.cols}}, {"offset", e.offset}, {"bytes", e.bytes}, {"sha256", e.sha256}};
}

TensorEntry entry_from(const json& j) {
    TensorEntry e;
    e.name = j.at("name").get<std::string>();
    e.rows = j.at("shape").at(0).get<Eigen::Index>();
    e.cols = j.at("shape").at(1).get<Eigen::Index>();
    e.offset = j.at("offset").get<std::uint64_t>();
    e.bytes = j.at("bytes").get<std::uint64_t>();
    e.sha256 = j.at("sha256").get<std::string>();
    return e;
}

json config_json(const ModelConfig& c) {
    return {{"hidden", c.hidden},
            {"encoder_blocks", c.encoder_blocks},
            {"decoder_blocks", c.decoder_blocks},
            {"heads", c.heads},
            {"ffn_filter", c.ffn_filter},
            {"conv_kernel", c.conv_kernel},
            {"mel_dim", c.mel_dim},
            {"phoneme_vocab", c.phoneme_vocab},
            {"predictor_channels", c.predictor_channels},
            {"predictor_kernel", c.predictor_kernel},
            {"dropout", c.dropout}};
}

ModelConfig config_from(const json& j) {
    ModelConfig c;
    c.hidden = j.at("hidden").get<int>();
    c.encoder_blocks = j.at("encoder_blocks").get<int>();
    c.decoder_blocks = j.at("decoder_blocks").get<int>();
    c.heads = j.at("heads").get<int>();
    c.ffn_filter = j.at("ffn_filter").get<int>();
    c.conv_kernel = j.at("conv_kernel").get<int>();
    c.mel_dim = j.at("mel_dim").get<int>();
    c.phoneme_vocab = j.at("phoneme_vocab").get<int>();
    c.predictor_channels = j.at("predictor_channels").get<int>();
    c.predictor_kernel = j.at("predictor_kernel").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.validate();
    return c;
}

Tensor<float> read_tensor(const std::string& blob, const TensorEntry& e) {
    require(e.rows >= 0 && e.cols >= 0 &&
                e.bytes == static_cast<std::uint64_t>(e.rows * e.cols) * sizeof(float),
            ErrorKind::Integrity, "tensor " + e.name + ": shape does not match its byte count");
    require(e.offset <= blob.size() && e.bytes <= blob.size() - e.offset, ErrorKind::Integrity,
            "tensor " + e.name + " extends past the end of " + kCheckpointBlob + " (file truncated)");
    Tensor<float> t(e.rows, e.cols);
    std::memcpy(t.data(), blob.data() + e.offset, e.bytes);
    require(sha256_hex(tensor_bytes(t)) == e.sha256, ErrorKind::Integrity,
            "tensor " + e.name + ": sha256 mismatch (checkpoint corrupt)");
    return t;
}

std::string read_binary(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string tensor_sha256(const Tensor<float>& t) { return sha256_hex(tensor_bytes(t)); }

std::map<std::string, std::string> parameter_hashes(const ParameterSet<float>& params) {
    std::map<std::string, std::string> out;
    for (const auto* p : params.all()) out[p->name] = tensor_sha256(p->value);
    return out;
}

CheckpointManifest save_checkpoint(const fs::path& dir, const Checkpoint& ck) {
    CheckpointManifest m;
    m.stage_history = ck.stage_history;
    m.config_hash = ck.config_hash;
    m.seed = ck.seed;
    std::string blob;
    const auto& model = ck.model;
    for (const auto* p : model.parameters().all()) {
        m.tensors.push_back(append(blob, p->name, p->value));
    }
    for (const auto& [name, moments] : ck.optimizer.moments) {
        m.optimizer.push_back(append(blob, "adam.m." + name, moments.m));
        m.optimizer.push_back(append(blob, "adam.v." + name, moments.v));
    }

    json j;
    j["format_version"] = m.format_version;
    j["tensors"] = json::array();
    for (const auto& e : m.tensors) j["tensors"].push_back(entry_json(e));
    const auto& oc = ck.optimizer.config;
    j["optimizer"] = {{"step_count", ck.optimizer.step_count},
                      {"hyperparameters",
                       {{"learning_rate", oc.learning_rate},
                        {"beta1", oc.beta1},
                        {"beta2", oc.beta2},
                        {"epsilon", oc.epsilon}}},
                      {"tensors", json::array()}};
    for (const auto& e : m.optimizer) j["optimizer"]["tensors"].push_back(entry_json(e));
    j["stage_history"] = m.stage_history;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["speakers"] = model.speakers();
    j["duration_mode"] = model.duration_mode == DurationMode::Mixture ? "mixture" : "single";
    if (model.speed_boundaries) {
        j["speed_boundaries"] = {model.speed_boundaries->t1, model.speed_boundaries->t2};
    } else {
        j["speed_boundaries"] = nullptr;
    }
    j["fp_adapted"] = model.fp_adapted;
    j["model_config"] = config_json(model.config());

    fs::create_directories(dir);
    {
        const fs::path tmp = dir / (std::string(kCheckpointBlob) + ".tmp");
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), ErrorKind::Io, "cannot write " + tmp.string());
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        out.close();
        require(out.good(), ErrorKind::Io, "failed writing " + tmp.string());
        fs::rename(tmp, dir / kCheckpointBlob);
    }
    write_text_file(dir / kCheckpointManifest, j.dump(2) + "\n");
    return m;
}

Checkpoint load_checkpoint(const fs::path& dir, const std::string& expected_config_hash) {
    const fs::path manifest_path = dir / kCheckpointManifest;
    require(fs::exists(manifest_path), ErrorKind::Io, "no checkpoint at " + dir.string() + " (missing manifest.json)");
    json j;
    try {
        j = json::parse(read_text_file(manifest_path));
    } catch (const json::exception& e) {
        fail(ErrorKind::Integrity, manifest_path.string() + ": " + e.what());
    }
    try {
        const int version = j.at("format_version").get<int>();
        require(version == kCheckpointFormatVersion, ErrorKind::Integrity,
                "checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kCheckpointFormatVersion) + ")");
        const std::string blob = read_binary(dir / kCheckpointBlob);

        const ModelConfig config = config_from(j.at("model_config"));
        AcousticModel<float> model(config, j.at("speakers").get<std::vector<std::string>>(), 0);
        ParameterSet<float> values;
        for (const auto& ej : j.at("tensors")) {
            const TensorEntry e = entry_from(ej);
            values.add(e.name, read_tensor(blob, e));
        }
        model.load_values(values);
        const std::string mode = j.at("duration_mode").get<std::string>();
        require(mode == "single" || mode == "mixture", ErrorKind::Integrity, "unknown duration mode '" + mode + "'");
        model.duration_mode = mode == "mixture" ? DurationMode::Mixture : DurationMode::Single;
        if (!j.at("speed_boundaries").is_null()) {
            model.speed_boundaries = SpeedBucketBoundaries{j["speed_boundaries"].at(0).get<int>(),
                                                           j["speed_boundaries"].at(1).get<int>()};
        }
        model.fp_adapted = j.at("fp_adapted").get<bool>();

        Checkpoint ck{std::move(model), {}, j.at("stage_history").get<std::vector<std::string>>(),
                      j.at("config_hash").get<std::string>(), j.at("seed").get<std::uint64_t>(), {}};
        const auto& oj = j.at("optimizer");
        ck.optimizer.step_count = oj.at("step_count").get<std::int64_t>();
        const auto& hp = oj.at("hyperparameters");
        ck.optimizer.config = {hp.at("learning_rate").get<double>(), hp.at("beta1").get<double>(),
                               hp.at("beta2").get<double>(), hp.at("epsilon").get<double>()};
        for (const auto& ej : oj.at("tensors")) {
            const TensorEntry e = entry_from(ej);
            Tensor<float> t = read_tensor(blob, e);
            if (has_prefix(e.name, "adam.m.")) {
                ck.optimizer.moments[e.name.substr(7)].m = std::move(t);
            } else if (has_prefix(e.name, "adam.v.")) {
                ck.optimizer.moments[e.name.substr(7)].v = std::move(t);
            } else {
                fail(ErrorKind::Integrity, "unexpected optimizer tensor " + e.name);
            }
        }
        if (!expected_config_hash.empty() && expected_config_hash != ck.config_hash) {
            ck.warnings.push_back("checkpoint config hash " + ck.config_hash + " differs from the loading config " +
                                  expected_config_hash);
        }
        return ck;
    } catch (const json::exception& e) {
        fail(ErrorKind::Integrity, manifest_path.string() + ": malformed manifest: " + e.what());
    }
}

std::string model_config_hash(const ModelConfig& config) { return sha256_hex(config_json(config).dump()); }

std::string checkpoint_digest(const fs::path& dir) {
    return sha256_hex(read_binary(dir / kCheckpointManifest) + read_binary(dir / kCheckpointBlob));
}

}  // namespace spontts
