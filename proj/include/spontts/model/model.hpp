#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spontts/adaptation/losses.hpp"
#include "spontts/corpus/fp_pair.hpp"
#include "spontts/corpus/record.hpp"
#include "spontts/corpus/speed.hpp"
#include "spontts/model/config.hpp"
#include "spontts/model/predictor.hpp"
#include "spontts/numerics/layers.hpp"

namespace spontts {

enum class DurationMode { Single, Mixture };

inline constexpr const char* kExpertNames[] = {"fast", "medium", "slow"};

// Per position: s0 > T -> NONE, otherwise UH when s1 >= s2, else UM.
template <typename Scalar>
std::vector<FpTag> decide_fp_tags(const Tensor<Scalar>& probs, double threshold) {
    require(threshold >= 0.0 && threshold <= 1.0, ErrorKind::Config, "FP threshold must lie in [0, 1]");
    require(probs.cols() == 3, ErrorKind::Dimension, "FP probabilities must have three columns");
    std::vector<FpTag> tags;
    tags.reserve(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        if (static_cast<double>(probs(i, 0)) > threshold) {
            tags.push_back(FpTag::None);
        } else {
            tags.push_back(probs(i, 1) >= probs(i, 2) ? FpTag::Uh : FpTag::Um);
        }
    }
    return tags;
}

// Inference frame count from a log(1 + d) prediction.
inline int frames_from_log_duration(double x) {
    return std::max(1, static_cast<int>(std::lround(std::exp(x) - 1.0)));
}

// Row-wise convex combination sum_k probs[:, k] * experts[:, k].
template <typename Scalar>
Tensor<Scalar> moe_combine(const Tensor<Scalar>& probs, const Tensor<Scalar>& experts) {
    require(probs.rows() == experts.rows() && probs.cols() == 3 && experts.cols() == 3, ErrorKind::Dimension,
            "MoE combination needs [n x 3] router and expert matrices");
    Tensor<Scalar> out(probs.rows(), 1);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        out(i, 0) = probs(i, 0) * experts(i, 0) + probs(i, 1) * experts(i, 1) + probs(i, 2) * experts(i, 2);
    }
    return out;
}

template <typename Scalar>
Var<Scalar> moe_combine(Var<Scalar> probs, const std::vector<Var<Scalar>>& experts) {
    require(probs.cols() == 3 && experts.size() == 3, ErrorKind::Dimension, "MoE needs three experts");
    Var<Scalar> out = hadamard(slice_cols(probs, 0, 1), experts[0]);
    out = add(out, hadamard(slice_cols(probs, 1, 1), experts[1]));
    return add(out, hadamard(slice_cols(probs, 2, 1), experts[2]));
}

// One utterance in model terms. `phoneme_ids` starts with BOS and has FPs
// removed; durations and pitch follow the FP-extended order (each tagged
// phoneme directly followed by its FP position).
struct TrainingExample {
    std::string id;
    int speaker = -1;  // -1: condition on the mean speaker embedding
    std::vector<int> phoneme_ids;
    std::vector<FpTag> tags;
    std::vector<int> durations;
    std::vector<float> pitch;
    std::optional<MelMatrix> mel;

    std::size_t extended_length() const { return phoneme_ids.size() + count_fp(tags); }
    bool has_prosody() const { return !durations.empty(); }
};

// A missing leading BOS is added with duration 0 and pitch 0. Adjacent FP
// tokens collapse into the first; their frames are added to it.
TrainingExample make_example(const UtteranceRecord& record, int speaker);
TrainingExample make_example(const FpRecord& record, int speaker);

// Symbols with BOS prepended when absent, mapped to inventory ids.
std::vector<int> phoneme_ids_with_bos(std::span<const std::string> symbols);

enum class DurationTarget {
    Auto,      // Single before rhythm adaptation, Combined after
    Single,    // single predictor vs log(1 + d)
    Combined,  // router-weighted expert mixture vs log(1 + d)
    Routed,    // each expert only on positions of its ground-truth bucket
};

struct LossSelection {
    bool mel = true;
    bool duration = true;
    bool pitch = true;
    bool fp = true;
    bool router = true;
    DurationTarget duration_target = DurationTarget::Auto;
    double sigma = 5.0;

    static LossSelection none() { return {false, false, false, false, false, DurationTarget::Auto, 5.0}; }
};

template <typename Scalar>
struct LossBundle {
    std::optional<Var<Scalar>> mel_l1;
    std::optional<Var<Scalar>> duration_mse;
    std::optional<Var<Scalar>> pitch_mse;
    std::optional<Var<Scalar>> fp_ce;
    std::optional<Var<Scalar>> router_ce;

    // Unweighted sum of the present terms.
    Var<Scalar> total() const {
        std::optional<Var<Scalar>> sum;
        for (const auto* term : {&mel_l1, &duration_mse, &pitch_mse, &fp_ce, &router_ce}) {
            if (*term) sum = sum ? add(*sum, **term) : **term;
        }
        require(sum.has_value(), ErrorKind::State, "no loss term selected");
        return *sum;
    }

    std::map<std::string, double> values() const {
        std::map<std::string, double> out;
        auto put = [&](const char* name, const std::optional<Var<Scalar>>& v) {
            if (v) out[name] = static_cast<double>(v->value()(0, 0));
        };
        put("mel_l1", mel_l1);
        put("duration_mse", duration_mse);
        put("pitch_mse", pitch_mse);
        put("fp_ce", fp_ce);
        put("router_ce", router_ce);
        return out;
    }
};

struct SynthesisConfig {
    double fp_threshold = 0.5;
    bool fp_enabled = true;
    std::string speaker;  // empty or unknown: mean speaker embedding
};

template <typename Scalar>
struct SynthesisResult {
    std::vector<int> phoneme_ids;  // BOS first
    Tensor<Scalar> fp_probs;       // [n x 3]; empty when FP prediction is off
    std::vector<FpTag> fp_tags;    // per phoneme
    std::vector<std::string> extended_symbols;
    std::vector<int> durations;  // per extended position, >= 1
    std::vector<float> pitch;    // per extended position
    Tensor<Scalar> mel;          // [sum(durations) x 80]
    std::vector<std::string> warnings;
};

// The acoustic model: phoneme encoder, FP predictor and FP embedding
// insertion, pitch predictor, single or mixture-of-experts duration
// prediction, length regulator and a speaker-conditioned mel decoder.
template <typename Scalar>
class AcousticModel {
public:
    AcousticModel(const ModelConfig& config, std::vector<std::string> speakers, std::uint64_t seed);

    AcousticModel(const AcousticModel& other) { *this = other; }
    AcousticModel& operator=(const AcousticModel& other);

    template <typename Other>
    AcousticModel<Other> cast() const;

    const ModelConfig& config() const { return config_; }
    ParameterSet<Scalar>& parameters() { return params_; }
    const ParameterSet<Scalar>& parameters() const { return params_; }
    const std::vector<std::string>& speakers() const { return speakers_; }

    int speaker_index(const std::string& name) const;  // -1 when unknown
    // Appends a speaker row initialised to the mean of the existing rows.
    int add_speaker(const std::string& name);

    DurationMode duration_mode = DurationMode::Single;
    std::optional<SpeedBucketBoundaries> speed_boundaries;
    bool fp_adapted = false;

    // Copies the single duration predictor into the three experts.
    void init_experts_from_duration_predictor();

    // Replaces every parameter value from `values`, which must carry the
    // same names and shapes.
    void load_values(const ParameterSet<Scalar>& values);

    Var<Scalar> speaker_condition(Tape<Scalar>& tape, int speaker);
    Var<Scalar> encode(Tape<Scalar>& tape, std::span<const int> phoneme_ids, Var<Scalar> condition);
    Var<Scalar> predict_fp_probs(Var<Scalar> hidden);
    Var<Scalar> insert_fp_embeddings(Var<Scalar> hidden, std::span<const FpTag> tags);
    Var<Scalar> predict_pitch(Var<Scalar> hidden);
    Var<Scalar> route_speed(Var<Scalar> hidden);
    Var<Scalar> expert_log_duration(Var<Scalar> hidden, SpeedTag expert);
    Var<Scalar> single_log_duration(Var<Scalar> hidden);
    Var<Scalar> moe_predict_duration(Var<Scalar> hidden);
    Var<Scalar> regulate_length(Var<Scalar> hidden, std::span<const int> durations);
    Var<Scalar> decode(Var<Scalar> frame_hidden, Var<Scalar> pitch_frames, Var<Scalar> condition);

    // Teacher-forced losses for one example; terms whose inputs the example
    // lacks (mel, prosody, speed buckets) are left empty.
    LossBundle<Scalar> forward_train(Tape<Scalar>& tape, const TrainingExample& example,
                                     const LossSelection& selection = {});

    SynthesisResult<Scalar> synthesize(std::span<const int> phoneme_ids, const SynthesisConfig& config);

private:
    AcousticModel() = default;
    template <typename>
    friend class AcousticModel;

    void bind();
    Var<Scalar> positions(Tape<Scalar>& tape, Eigen::Index rows);

    ModelConfig config_;
    std::vector<std::string> speakers_;
    ParameterSet<Scalar> params_;

    Parameter<Scalar>* phoneme_embedding_ = nullptr;
    Parameter<Scalar>* fp_embedding_ = nullptr;
    Parameter<Scalar>* speaker_embedding_ = nullptr;
    Parameter<Scalar>* pitch_projection_weight_ = nullptr;
    Parameter<Scalar>* pitch_projection_bias_ = nullptr;
    Parameter<Scalar>* output_weight_ = nullptr;
    Parameter<Scalar>* output_bias_ = nullptr;
    std::vector<TransformerBlockWeights<Scalar>> encoder_;
    std::vector<TransformerBlockWeights<Scalar>> decoder_;
    PredictorWeights<Scalar> fp_predictor_;
    PredictorWeights<Scalar> pitch_predictor_;
    PredictorWeights<Scalar> duration_predictor_;
    PredictorWeights<Scalar> router_;
    PredictorWeights<Scalar> experts_[3];
};

namespace detail {

inline TransformerBlockShape block_shape(const ModelConfig& c) {
    TransformerBlockShape s;
    s.hidden = c.hidden;
    s.condition = c.hidden;
    s.filter = c.ffn_filter;
    s.kernel = c.conv_kernel;
    s.heads = c.heads;
    s.dropout = c.dropout;
    return s;
}

template <typename Scalar>
TransformerBlockWeights<Scalar> bind_block(ParameterSet<Scalar>& p, const std::string& prefix,
                                           const std::string& norm_prefix) {
    TransformerBlockWeights<Scalar> w;
    auto& a = w.attention;
    a.wq = &p.at(prefix + ".attention.wq");
    a.bq = &p.at(prefix + ".attention.bq");
    a.wk = &p.at(prefix + ".attention.wk");
    a.bk = &p.at(prefix + ".attention.bk");
    a.wv = &p.at(prefix + ".attention.wv");
    a.bv = &p.at(prefix + ".attention.bv");
    a.wo = &p.at(prefix + ".attention.wo");
    a.bo = &p.at(prefix + ".attention.bo");
    w.ffn.w1 = &p.at(prefix + ".ffn.w1");
    w.ffn.b1 = &p.at(prefix + ".ffn.b1");
    w.ffn.w2 = &p.at(prefix + ".ffn.w2");
    w.ffn.b2 = &p.at(prefix + ".ffn.b2");
    auto norm = [&](const std::string& base) {
        ConditionalNormWeights<Scalar> n;
        n.scale_weight = &p.at(base + ".scale_weight");
        n.scale_bias = &p.at(base + ".scale_bias");
        n.shift_weight = &p.at(base + ".shift_weight");
        n.shift_bias = &p.at(base + ".shift_bias");
        return n;
    };
    w.norm1 = norm(norm_prefix + ".norm1");
    w.norm2 = norm(norm_prefix + ".norm2");
    return w;
}

inline std::string block_name(const char* side, int i) { return std::string(side) + ".block" + std::to_string(i); }

}  // namespace detail

template <typename Scalar>
AcousticModel<Scalar>::AcousticModel(const ModelConfig& config, std::vector<std::string> speakers, std::uint64_t seed)
    : config_(config), speakers_(std::move(speakers)) {
    config_.validate();
    require(!speakers_.empty(), ErrorKind::Config, "model needs at least one speaker");
    std::mt19937_64 rng(seed);
    const Eigen::Index h = config_.hidden;
    const auto& inv = PhonemeInventory::standard();

    auto& emb = params_.add("phoneme_embedding", random_normal<Scalar>(config_.vocab(), h, 1.0, rng));
    Tensor<Scalar> fp(2, h);
    fp.row(0) = emb.value.row(inv.id("ah"));
    fp.row(1) = (emb.value.row(inv.id("ah")) + emb.value.row(inv.id("m"))) * Scalar(0.5);
    params_.add("fp_embedding", fp);
    params_.add("speaker_embedding",
                random_normal<Scalar>(static_cast<Eigen::Index>(speakers_.size()), h, 1.0, rng));
    params_.add("pitch_projection.weight", random_normal<Scalar>(1, h, 1.0, rng));
    params_.add("pitch_projection.bias", Tensor<Scalar>::Zero(1, h));

    const auto shape = detail::block_shape(config_);
    for (int i = 0; i < config_.encoder_blocks; ++i) {
        register_transformer_block(params_, detail::block_name("encoder", i),
                                   "cln." + detail::block_name("encoder", i), shape, rng);
    }
    const Eigen::Index ch = config_.predictor_channels, k = config_.predictor_kernel;
    register_predictor(params_, "fp_predictor", h, ch, k, 3, true, rng);
    register_predictor(params_, "pitch_predictor", h, ch, k, 1, false, rng);
    register_predictor(params_, "duration_predictor", h, ch, k, 1, false, rng);
    register_predictor(params_, "router", h, ch, k, 3, true, rng);
    for (const char* e : kExpertNames) {
        register_predictor(params_, std::string("duration_expert.") + e, h, ch, k, 1, false, rng);
    }
    for (int i = 0; i < config_.decoder_blocks; ++i) {
        register_transformer_block(params_, detail::block_name("decoder", i),
                                   "cln." + detail::block_name("decoder", i), shape, rng);
    }
    params_.add("decoder.output.weight",
                random_normal<Scalar>(h, config_.mel_dim, 1.0 / std::sqrt(static_cast<double>(h)), rng));
    params_.add("decoder.output.bias", Tensor<Scalar>::Zero(1, config_.mel_dim));
    bind();
    init_experts_from_duration_predictor();
}

template <typename Scalar>
AcousticModel<Scalar>& AcousticModel<Scalar>::operator=(const AcousticModel& other) {
    if (this != &other) {
        config_ = other.config_;
        speakers_ = other.speakers_;
        params_ = other.params_;
        duration_mode = other.duration_mode;
        speed_boundaries = other.speed_boundaries;
        fp_adapted = other.fp_adapted;
        bind();
    }
    return *this;
}

template <typename Scalar>
template <typename Other>
AcousticModel<Other> AcousticModel<Scalar>::cast() const {
    AcousticModel<Other> out;
    out.config_ = config_;
    out.speakers_ = speakers_;
    out.params_ = params_.template cast<Other>();
    out.duration_mode = duration_mode;
    out.speed_boundaries = speed_boundaries;
    out.fp_adapted = fp_adapted;
    out.bind();
    return out;
}

template <typename Scalar>
void AcousticModel<Scalar>::bind() {
    phoneme_embedding_ = &params_.at("phoneme_embedding");
    fp_embedding_ = &params_.at("fp_embedding");
    speaker_embedding_ = &params_.at("speaker_embedding");
    pitch_projection_weight_ = &params_.at("pitch_projection.weight");
    pitch_projection_bias_ = &params_.at("pitch_projection.bias");
    output_weight_ = &params_.at("decoder.output.weight");
    output_bias_ = &params_.at("decoder.output.bias");
    encoder_.clear();
    decoder_.clear();
    for (int i = 0; i < config_.encoder_blocks; ++i) {
        const auto name = detail::block_name("encoder", i);
        encoder_.push_back(detail::bind_block(params_, name, "cln." + name));
    }
    for (int i = 0; i < config_.decoder_blocks; ++i) {
        const auto name = detail::block_name("decoder", i);
        decoder_.push_back(detail::bind_block(params_, name, "cln." + name));
    }
    fp_predictor_ = bind_predictor(params_, "fp_predictor");
    pitch_predictor_ = bind_predictor(params_, "pitch_predictor");
    duration_predictor_ = bind_predictor(params_, "duration_predictor");
    router_ = bind_predictor(params_, "router");
    for (int e = 0; e < 3; ++e) {
        experts_[e] = bind_predictor(params_, std::string("duration_expert.") + kExpertNames[e]);
    }
}

template <typename Scalar>
int AcousticModel<Scalar>::speaker_index(const std::string& name) const {
    for (std::size_t i = 0; i < speakers_.size(); ++i) {
        if (speakers_[i] == name) return static_cast<int>(i);
    }
    return -1;
}

template <typename Scalar>
int AcousticModel<Scalar>::add_speaker(const std::string& name) {
    require(speaker_index(name) < 0, ErrorKind::State, "speaker " + name + " already exists");
    auto& table = *speaker_embedding_;
    Tensor<Scalar> grown(table.value.rows() + 1, table.value.cols());
    grown.topRows(table.value.rows()) = table.value;
    grown.row(table.value.rows()) = table.value.colwise().mean();
    table.value = std::move(grown);
    table.zero_grad();
    speakers_.push_back(name);
    return static_cast<int>(speakers_.size()) - 1;
}

template <typename Scalar>
void AcousticModel<Scalar>::init_experts_from_duration_predictor() {
    for (const char* e : kExpertNames) {
        for (const char* part : kPredictorParts) {
            params_.at(std::string("duration_expert.") + e + "." + part).value =
                params_.at(std::string("duration_predictor.") + part).value;
        }
    }
}

template <typename Scalar>
void AcousticModel<Scalar>::load_values(const ParameterSet<Scalar>& values) {
    require(values.size() == params_.size(), ErrorKind::Integrity,
            "parameter count " + std::to_string(values.size()) + " does not match the model (" +
                std::to_string(params_.size()) + ")");
    for (auto* p : params_.all()) {
        require(values.contains(p->name), ErrorKind::Integrity, "missing tensor " + p->name);
        const auto& v = values.at(p->name).value;
        require(v.rows() == p->value.rows() && v.cols() == p->value.cols(), ErrorKind::Integrity,
                "tensor " + p->name + " has shape " + detail::shape_str(v.rows(), v.cols()) + ", model expects " +
                    detail::shape_str(p->value.rows(), p->value.cols()));
        p->value = v;
        p->zero_grad();
    }
}

template <typename Scalar>
Var<Scalar> AcousticModel<Scalar>::positions(Tape<Scalar>& tape, Eigen::Index rows) {
    return tape.constant(sinusoidal_positions<Scalar>(rows, config_.hidden));
}

template <typename Scalar>
Var<Scalar> AcousticModel<Scalar>::speaker_condition(Tape<Scalar>& tape, int speaker) {
    Var<Scalar> table = tape.parameter(*speaker_embedding_);
    if (speaker < 0) return mean_rows(table);
    require(speaker < table.rows(), ErrorKind::Vocabulary, "speaker index " + std::to_string(speaker) + " unknown");
    const int ids[] = {speaker};
    return gather_rows(table, std::span<const int>(ids));
}

template <typename Scalar>
Var<Scalar> AcousticModel<Scalar>::encode(Tape<Scalar>& tape, std::span<const int> phoneme_ids,
                                          Var<Scalar> condition) {
    require(!phoneme_ids.empty(), ErrorKind::Contract, "encode needs at least the BOS position");
    Var<Scalar> x = gather_rows(tape.parameter(*phoneme_embedding_), phoneme_ids);
    x = add(x, positions(tape, x.rows()));
    for (const auto& block : encoder_) {
        x = transformer_ffn_block(x, block, condition, config_.heads, config_.dropout);
    }
    return x;
}

template <typename Scalar>
Var<Scalar> AcousticModel<Scalar>::predict_fp_probs(Var<Scalar> hidden) {
    return softmax_rows(predictor_forward(hidden, fp_predictor_, config_.dropout));
}

template <typename Scalar>
Var<Scalar> AcousticModel<Scalar>::insert_fp_embeddings(Var<Scalar> hidden, std::span<const FpTag> tags) {
    require(static_cast<Eigen::Index>(tags.size()) == hidden.rows(), ErrorKind::Dimension,
            "one FP tag per hidden position required");
    std::vector<RowSource> plan;
    plan.reserve(tags.size() + count_fp(tags));
    for (std::size_t i = 0; i < tags.size(); ++i) {
        plan.push_back({false, static_cast<Eigen::Index>(i)});
        if (tags[i] != FpTag::None) {
            plan.push_back({true, tags[i] == FpTag::Uh ? 0 : 1});
        }
    }
    return interleave_rows(hidden, hidden.tape().parameter(*fp_embedding_), std::move(plan));
}

template <typename Scalar>
Var<Scalar> AcousticModel<Scalar>::predict_pitch(Var<Scalar> hidden) {
    return predictor_forward(hidden, pitch_predictor_, config_.dropout);
}

template <typename Scalar>
Var<Scalar> AcousticModel<Scalar>::route_speed(Var<Scalar> hidden) {
    return softmax_rows(predictor_forward(hidden, router_, config_.dropout));
}

template <typename Scalar>
Var<Scalar> AcousticModel<Scalar>::expert_log_duration(Var<Scalar> hidden, SpeedTag expert) {
    return predictor_forward(hidden, experts_[static_cast<int>(expert)], config_.dropout);
}

template <typename Scalar>
Var<Scalar> AcousticModel<Scalar>::single_log_duration(Var<Scalar> hidden) {
    return predictor_forward(hidden, duration_predictor_, config_.dropout);
}

template <typename Scalar>
Var<Scalar> AcousticModel<Scalar>::moe_predict_duration(Var<Scalar> hidden) {
    std::vector<Var<Scalar>> experts;
    for (auto tag : {SpeedTag::Fast, SpeedTag::Medium, SpeedTag::Slow}) {
        experts.push_back(expert_log_duration(hidden, tag));
    }
    return moe_combine(route_speed(hidden), experts);
}

template <typename Scalar>
Var<Scalar> AcousticModel<Scalar>::regulate_length(Var<Scalar> hidden, std::span<const int> durations) {
    return repeat_rows(hidden, durations);
}

template <typename Scalar>
Var<Scalar> AcousticModel<Scalar>::decode(Var<Scalar> frame_hidden, Var<Scalar> pitch_frames,
                                          Var<Scalar> condition) {
    require(pitch_frames.rows() == frame_hidden.rows() && pitch_frames.cols() == 1, ErrorKind::Dimension,
            "pitch frames " + detail::shape_str(pitch_frames.rows(), pitch_frames.cols()) + " do not match " +
                std::to_string(frame_hidden.rows()) + " hidden frames");
    auto& tape = frame_hidden.tape();
    Var<Scalar> x = add(frame_hidden, linear(pitch_frames, tape.parameter(*pitch_projection_weight_),
                                             tape.parameter(*pitch_projection_bias_)));
    x = add(x, positions(tape, x.rows()));
    for (const auto& block : decoder_) {
        x = transformer_ffn_block(x, block, condition, config_.heads, config_.dropout);
    }
    return linear(x, tape.parameter(*output_weight_), tape.parameter(*output_bias_));
}

template <typename Scalar>
LossBundle<Scalar> AcousticModel<Scalar>::forward_train(Tape<Scalar>& tape, const TrainingExample& ex,
                                                        const LossSelection& sel) {
    require(ex.phoneme_ids.size() == ex.tags.size(), ErrorKind::Data, ex.id + ": phoneme and tag counts differ");
    const std::size_t ext = ex.extended_length();
    if (ex.has_prosody()) {
        require(ex.durations.size() == ext && ex.pitch.size() == ext, ErrorKind::Data,
                ex.id + ": prosody length does not match the FP-extended sequence");
    }
    LossBundle<Scalar> out;
    Var<Scalar> condition = speaker_condition(tape, ex.speaker);
    Var<Scalar> hidden = encode(tape, ex.phoneme_ids, condition);
    if (sel.fp) {
        out.fp_ce = weighted_ce_loss(predict_fp_probs(hidden), std::span<const FpTag>(ex.tags), Scalar(sel.sigma));
    }
    if (!ex.has_prosody() || !(sel.duration || sel.pitch || sel.router || (sel.mel && ex.mel))) {
        return out;
    }
    Var<Scalar> extended = insert_fp_embeddings(hidden, ex.tags);
    const auto n = static_cast<Eigen::Index>(ext);
    Tensor<Scalar> pitch_target(n, 1), log_duration(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        pitch_target(i, 0) = Scalar(ex.pitch[static_cast<std::size_t>(i)]);
        log_duration(i, 0) = Scalar(std::log1p(static_cast<double>(ex.durations[static_cast<std::size_t>(i)])));
    }
    if (sel.pitch) {
        out.pitch_mse = mse_loss(predict_pitch(extended), pitch_target);
    }
    std::vector<SpeedTag> buckets;
    if (speed_boundaries) {
        for (int d : ex.durations) buckets.push_back(assign_speed_tag(d, *speed_boundaries));
    }
    if (sel.duration) {
        DurationTarget target = sel.duration_target;
        if (target == DurationTarget::Auto) {
            target = duration_mode == DurationMode::Single ? DurationTarget::Single : DurationTarget::Combined;
        }
        if (target == DurationTarget::Single) {
            out.duration_mse = mse_loss(single_log_duration(extended), log_duration);
        } else if (target == DurationTarget::Combined) {
            out.duration_mse = mse_loss(moe_predict_duration(extended), log_duration);
        } else {
            require(speed_boundaries.has_value(), ErrorKind::State, "routed expert loss needs speed buckets");
            std::optional<Var<Scalar>> sum;
            for (int e = 0; e < 3; ++e) {
                Tensor<Scalar> mask(n, 1);
                for (Eigen::Index i = 0; i < n; ++i) {
                    mask(i, 0) = static_cast<int>(buckets[static_cast<std::size_t>(i)]) == e ? Scalar(1) : Scalar(0);
                }
                if (mask.sum() == Scalar(0)) continue;
                Var<Scalar> term = masked_mse(expert_log_duration(extended, static_cast<SpeedTag>(e)), log_duration, mask);
                sum = sum ? add(*sum, term) : term;
            }
            if (sum) out.duration_mse = *sum;
        }
    }
    if (sel.router && speed_boundaries) {
        std::vector<int> labels;
        for (auto b : buckets) labels.push_back(static_cast<int>(b));
        const std::vector<Scalar> ones(labels.size(), Scalar(1));
        out.router_ce = weighted_nll(route_speed(extended), std::span<const int>(labels), std::span<const Scalar>(ones));
    }
    if (sel.mel && ex.mel) {
        require(ex.mel->rows() == std::accumulate(ex.durations.begin(), ex.durations.end(), Eigen::Index{0}),
                ErrorKind::Data, ex.id + ": mel frames do not match the duration sum");
        Var<Scalar> frames = regulate_length(extended, ex.durations);
        Var<Scalar> pitch_frames = repeat_rows(tape.constant(pitch_target), std::span<const int>(ex.durations));
        Var<Scalar> mel = decode(frames, pitch_frames, condition);
        out.mel_l1 = l1_loss(mel, Tensor<Scalar>(ex.mel->template cast<Scalar>()));
    }
    return out;
}

template <typename Scalar>
SynthesisResult<Scalar> AcousticModel<Scalar>::synthesize(std::span<const int> phoneme_ids,
                                                          const SynthesisConfig& cfg) {
    require(cfg.fp_threshold >= 0.0 && cfg.fp_threshold <= 1.0, ErrorKind::Config, "FP threshold must lie in [0, 1]");
    SynthesisResult<Scalar> out;
    if (phoneme_ids.empty() || phoneme_ids.front() != 0) out.phoneme_ids.push_back(0);
    out.phoneme_ids.insert(out.phoneme_ids.end(), phoneme_ids.begin(), phoneme_ids.end());
    const auto& inv = PhonemeInventory::standard();
    for (int id : out.phoneme_ids) {
        require(id >= 0 && id < config_.vocab(), ErrorKind::Vocabulary, "phoneme id " + std::to_string(id) + " unknown");
    }

    Tape<Scalar> tape(false);
    const int speaker = cfg.speaker.empty() ? -1 : speaker_index(cfg.speaker);
    if (!cfg.speaker.empty() && speaker < 0) {
        out.warnings.push_back("speaker '" + cfg.speaker + "' unknown; using the mean speaker embedding");
    }
    Var<Scalar> condition = speaker_condition(tape, speaker);
    Var<Scalar> hidden = encode(tape, out.phoneme_ids, condition);
    out.fp_tags.assign(out.phoneme_ids.size(), FpTag::None);
    if (cfg.fp_enabled) {
        if (!fp_adapted) out.warnings.emplace_back("FP predictor has not been adapted; FP tags are untrained");
        out.fp_probs = predict_fp_probs(hidden).value();
        out.fp_tags = decide_fp_tags(out.fp_probs, cfg.fp_threshold);
    }
    Var<Scalar> extended = insert_fp_embeddings(hidden, out.fp_tags);
    for (std::size_t i = 0; i < out.phoneme_ids.size(); ++i) {
        out.extended_symbols.push_back(inv.symbol(out.phoneme_ids[i]));
        if (out.fp_tags[i] != FpTag::None) out.extended_symbols.emplace_back(fp_symbol(out.fp_tags[i]));
    }
    Var<Scalar> pitch = predict_pitch(extended);
    Var<Scalar> log_d = duration_mode == DurationMode::Mixture ? moe_predict_duration(extended)
                                                               : single_log_duration(extended);
    for (Eigen::Index i = 0; i < extended.rows(); ++i) {
        out.durations.push_back(frames_from_log_duration(static_cast<double>(log_d.value()(i, 0))));
        out.pitch.push_back(static_cast<float>(pitch.value()(i, 0)));
    }
    Var<Scalar> frames = regulate_length(extended, out.durations);
    Var<Scalar> pitch_frames = repeat_rows(pitch, std::span<const int>(out.durations));
    out.mel = decode(frames, pitch_frames, condition).value();
    return out;
}

extern template class AcousticModel<float>;
extern template class AcousticModel<double>;

}  // namespace spontts
