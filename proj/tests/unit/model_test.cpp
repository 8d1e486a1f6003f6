#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "spontts/model/model.hpp"
#include "spontts/numerics/gradient_check.hpp"

namespace spontts {
namespace {

using Model = AcousticModel<float>;

std::vector<std::string> two_speakers() { return {"alice", "bob"}; }

std::vector<int> ids_of(std::initializer_list<const char*> symbols) {
    std::vector<int> out;
    for (const char* s : symbols) out.push_back(PhonemeInventory::standard().id(s));
    return out;
}

TEST(Model, EncodeShapeAndBosOnly) {
    Model m(ModelConfig::desk(), two_speakers(), 1);
    Tape<float> tape;
    auto cond = m.speaker_condition(tape, 0);
    auto ids = ids_of({"BOS", "hh", "ay"});
    auto h = m.encode(tape, ids, cond);
    EXPECT_EQ(h.rows(), 3);
    EXPECT_EQ(h.cols(), 32);
    const int bos[] = {0};
    auto b = m.encode(tape, bos, cond);
    EXPECT_EQ(b.rows(), 1);
    EXPECT_EQ(b.cols(), 32);
}

TEST(Model, SpeakerConditioningIsLive) {
    Model m(ModelConfig::desk(), two_speakers(), 1);
    Tape<float> tape;
    auto ids = ids_of({"BOS", "k", "ae", "t"});
    auto a = m.encode(tape, ids, m.speaker_condition(tape, 0)).value();
    auto b = m.encode(tape, ids, m.speaker_condition(tape, 1)).value();
    EXPECT_GT((a - b).cwiseAbs().maxCoeff(), 1e-4f);
}

TEST(Model, UnknownPhonemeIsVocabularyError) {
    Model m(ModelConfig::desk(), two_speakers(), 1);
    Tape<float> tape;
    const int bad[] = {0, 999};
    try {
        m.encode(tape, bad, m.speaker_condition(tape, 0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Vocabulary);
    }
}

TEST(Model, FpProbsAreDistributionsAndPositionSymmetric) {
    Model m(ModelConfig::desk(), two_speakers(), 2);
    std::mt19937_64 rng(4);
    m.parameters().at("fp_predictor.linear.weight").value = random_normal<float>(32, 3, 0.5, rng);
    Tape<float> tape;
    auto probs = m.predict_fp_probs(tape.constant(random_normal<float>(9, 32, 1.0, rng))).value();
    for (Eigen::Index i = 0; i < probs.rows(); ++i) EXPECT_NEAR(probs.row(i).sum(), 1.0f, 1e-6f);
    auto zero = m.predict_fp_probs(tape.constant(Tensor<float>::Zero(9, 32))).value();
    // conv stacks of width 3 twice see padding only within two steps of the edges
    for (Eigen::Index i = 3; i < 6; ++i) EXPECT_LE((zero.row(i) - zero.row(2)).cwiseAbs().maxCoeff(), 1e-6f);
}

TEST(Model, DecideFpTagsRule) {
    Tensor<double> p(3, 3);
    p << 0.95, 0.03, 0.02, 0.5, 0.2, 0.3, 0.5, 0.25, 0.25;
    auto tags = decide_fp_tags(p, 0.9);
    EXPECT_EQ(tags, (std::vector<FpTag>{FpTag::None, FpTag::Um, FpTag::Uh}));
}

TEST(Model, DecideFpTagsMonotoneInThreshold) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor<double> p(200, 3);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        double a = u(rng), b = u(rng), c = u(rng);
        p.row(i) << a, b, c;
        p.row(i) /= (a + b + c);
    }
    std::size_t previous = 0;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
        const auto n = count_fp(decide_fp_tags(p, t));
        EXPECT_GE(n, previous);
        previous = n;
    }
    EXPECT_EQ(count_fp(decide_fp_tags(p, 1.0)), 200u);
}

TEST(Model, InsertFpEmbeddings) {
    Model m(ModelConfig::desk(), two_speakers(), 3);
    Tape<float> tape;
    std::mt19937_64 rng(1);
    auto h = tape.constant(random_normal<float>(3, 32, 1.0, rng));
    const std::vector<FpTag> none(3, FpTag::None);
    EXPECT_TRUE(m.insert_fp_embeddings(h, none).value() == h.value());
    const std::vector<FpTag> tags = {FpTag::None, FpTag::Um, FpTag::None};
    auto out = m.insert_fp_embeddings(h, tags).value();
    ASSERT_EQ(out.rows(), 4);
    EXPECT_TRUE(out.row(2) == m.parameters().at("fp_embedding").value.row(1));
    EXPECT_TRUE(out.row(0) == h.value().row(0));
    EXPECT_TRUE(out.row(3) == h.value().row(2));
}

TEST(Model, InsertFpEmbeddingsReferenceTags) {
    Model m(ModelConfig::desk(), two_speakers(), 3);
    Tape<float> tape;
    std::mt19937_64 rng(1);
    // BOS + the 14 FP-free phonemes; tags on "d" (index 7) and "t" (index 10)
    std::vector<FpTag> tags(15, FpTag::None);
    tags[7] = FpTag::Um;
    tags[10] = FpTag::Uh;
    auto h = tape.constant(random_normal<float>(15, 32, 1.0, rng));
    auto out = m.insert_fp_embeddings(h, tags).value();
    ASSERT_EQ(out.rows(), 17);
    const auto& fp = m.parameters().at("fp_embedding").value;
    EXPECT_TRUE(out.row(8) == fp.row(1));
    EXPECT_TRUE(out.row(12) == fp.row(0));
    Tensor<float> kept(15, 32);
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < 17; ++r) {
        if (r == 8 || r == 12) continue;
        kept.row(k++) = out.row(r);
    }
    EXPECT_TRUE(kept == h.value());
}

TEST(Model, FpEmbeddingsStartFromSpellings) {
    Model m(ModelConfig::desk(), two_speakers(), 3);
    const auto& inv = PhonemeInventory::standard();
    const auto& emb = m.parameters().at("phoneme_embedding").value;
    const auto& fp = m.parameters().at("fp_embedding").value;
    EXPECT_TRUE(fp.row(0) == emb.row(inv.id("ah")));
    EXPECT_LE((fp.row(1) - 0.5f * (emb.row(inv.id("ah")) + emb.row(inv.id("m")))).cwiseAbs().maxCoeff(), 1e-6f);
}

TEST(Model, PitchShapeAndConstantInput) {
    Model m(ModelConfig::desk(), two_speakers(), 5);
    Tape<float> tape;
    auto out = m.predict_pitch(tape.constant(Tensor<float>::Constant(10, 32, 0.3f))).value();
    ASSERT_EQ(out.rows(), 10);
    ASSERT_EQ(out.cols(), 1);
    for (Eigen::Index i = 3; i < 7; ++i) EXPECT_NEAR(out(i, 0), out(2, 0), 1e-5f);
}

TEST(Model, RouterStartsUniform) {
    Model m(ModelConfig::desk(), two_speakers(), 5);
    Tape<float> tape;
    std::mt19937_64 rng(2);
    auto p = m.route_speed(tape.constant(random_normal<float>(6, 32, 1.0, rng))).value();
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        EXPECT_NEAR(p.row(i).sum(), 1.0f, 1e-6f);
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(p(i, k), 1.0f / 3.0f, 1e-7f);
    }
}

TEST(Model, ExpertsStartAsCopiesOfDurationPredictor) {
    Model m(ModelConfig::desk(), two_speakers(), 5);
    Tape<float> tape;
    std::mt19937_64 rng(3);
    auto h = tape.constant(random_normal<float>(7, 32, 1.0, rng));
    auto single = m.single_log_duration(h).value();
    for (auto tag : {SpeedTag::Fast, SpeedTag::Medium, SpeedTag::Slow}) {
        EXPECT_TRUE(m.expert_log_duration(h, tag).value() == single);
    }
    // identical experts: mixture is independent of the router
    m.parameters().at("router.linear.weight").value = random_normal<float>(32, 3, 1.0, rng);
    EXPECT_LE((m.moe_predict_duration(h).value() - single).cwiseAbs().maxCoeff(), 1e-5f);
}

TEST(Model, MoeHandArithmetic) {
    Tensor<double> p(1, 3), e(1, 3);
    p << 0.2, 0.3, 0.5;
    e << 0.0, 1.0, 2.0;
    const double combined = moe_combine(p, e)(0, 0);
    EXPECT_NEAR(combined, 1.3, 1e-12);
    EXPECT_EQ(frames_from_log_duration(combined), 3);
    EXPECT_EQ(frames_from_log_duration(-5.0), 1);
}

TEST(Model, MoeOneHotSelectsExpertExactly) {
    std::mt19937_64 rng(7);
    std::normal_distribution<float> g(0.0f, 2.0f);
    for (int k = 0; k < 3; ++k) {
        Tensor<float> p = Tensor<float>::Zero(50, 3), e(50, 3);
        p.col(k).setOnes();
        for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = g(rng);
        const auto out = moe_combine(p, e);
        for (Eigen::Index i = 0; i < 50; ++i) EXPECT_EQ(out(i, 0), e(i, k));
    }
}

TEST(Model, RegulateLength) {
    Model m(ModelConfig::desk(), two_speakers(), 1);
    Tape<float> tape;
    std::mt19937_64 rng(1);
    auto h = tape.constant(random_normal<float>(3, 32, 1.0, rng));
    const int d[] = {2, 1, 3};
    auto out = m.regulate_length(h, d).value();
    ASSERT_EQ(out.rows(), 6);
    EXPECT_TRUE(out.row(0) == h.value().row(0));
    EXPECT_TRUE(out.row(1) == h.value().row(0));
    EXPECT_TRUE(out.row(2) == h.value().row(1));
    const int zeros[] = {0, 0, 0};
    EXPECT_EQ(m.regulate_length(h, zeros).rows(), 0);
    const int negative[] = {1, -1, 0};
    try {
        m.regulate_length(h, negative);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Contract);
    }
    std::uniform_int_distribution<int> dist(0, 9);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> r(3);
        for (auto& x : r) x = dist(rng);
        auto o = m.regulate_length(h, r).value();
        EXPECT_EQ(o.rows(), std::accumulate(r.begin(), r.end(), 0));
        Eigen::Index f = 0;
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < r[static_cast<std::size_t>(i)]; ++k) EXPECT_TRUE(o.row(f++) == h.value().row(i));
    }
}

TEST(Model, DecodeShapes) {
    Model m(ModelConfig::desk(), two_speakers(), 1);
    Tape<float> tape;
    std::mt19937_64 rng(1);
    auto cond = m.speaker_condition(tape, 1);
    auto out = m.decode(tape.constant(random_normal<float>(7, 32, 1.0, rng)), tape.constant(Tensor<float>::Zero(7, 1)), cond);
    EXPECT_EQ(out.rows(), 7);
    EXPECT_EQ(out.cols(), 80);
    auto empty = m.decode(tape.constant(Tensor<float>::Zero(0, 32)), tape.constant(Tensor<float>::Zero(0, 1)), cond);
    EXPECT_EQ(empty.rows(), 0);
    try {
        m.decode(tape.constant(Tensor<float>::Zero(5, 32)), tape.constant(Tensor<float>::Zero(4, 1)), cond);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Dimension);
    }
}

UtteranceRecord tiny_record() {
    UtteranceRecord r;
    r.id = "tiny";
    r.speaker = "alice";
    r.style = Style::Spontaneous;
    r.phonemes = {"hh", "<uh>", "ay", "t"};
    r.durations = {2, 3, 1, 2};
    r.pitch = {0.5f, -0.6f, 0.1f, -0.2f};
    std::mt19937_64 rng(12);
    r.mel = random_normal<float>(8, 80, 0.5, rng);
    return r;
}

TEST(Model, MakeExampleAddsBosAndExtendsProsody) {
    const auto ex = make_example(tiny_record(), 0);
    EXPECT_EQ(ex.phoneme_ids.size(), 4u);
    EXPECT_EQ(ex.phoneme_ids[0], 0);
    EXPECT_EQ(ex.tags[1], FpTag::Uh);
    EXPECT_EQ(ex.durations, (std::vector<int>{0, 2, 3, 1, 2}));
    EXPECT_EQ(ex.extended_length(), 5u);
}

TEST(Model, MelLossZeroOnOwnOutput) {
    Model m(ModelConfig::desk(), two_speakers(), 6);
    auto ex = make_example(tiny_record(), 0);
    Tape<float> tape;
    auto cond = m.speaker_condition(tape, 0);
    auto ext = m.insert_fp_embeddings(m.encode(tape, ex.phoneme_ids, cond), ex.tags);
    Tensor<float> pitch(static_cast<Eigen::Index>(ex.pitch.size()), 1);
    for (std::size_t i = 0; i < ex.pitch.size(); ++i) pitch(static_cast<Eigen::Index>(i), 0) = ex.pitch[i];
    auto mel = m.decode(m.regulate_length(ext, ex.durations), repeat_rows(tape.constant(pitch), std::span<const int>(ex.durations)), cond);
    ex.mel = mel.value();
    Tape<float> eval;
    auto losses = m.forward_train(eval, ex);
    ASSERT_TRUE(losses.mel_l1.has_value());
    EXPECT_EQ(losses.mel_l1->value()(0, 0), 0.0f);
}

TEST(Model, DurationLossZeroWhenMixtureMatches) {
    Model m(ModelConfig::desk(), two_speakers(), 6);
    m.duration_mode = DurationMode::Mixture;
    for (const char* e : kExpertNames) {
        m.parameters().at(std::string("duration_expert.") + e + ".linear.weight").value.setZero();
        m.parameters().at(std::string("duration_expert.") + e + ".linear.bias").value.setConstant(std::log(3.0f));
    }
    TrainingExample ex;
    ex.id = "one";
    ex.speaker = 0;
    ex.phoneme_ids = {0};
    ex.tags = {FpTag::None};
    ex.durations = {2};
    ex.pitch = {0.0f};
    Tape<float> tape;
    auto l = m.forward_train(tape, ex);
    ASSERT_TRUE(l.duration_mse.has_value());
    EXPECT_NEAR(l.duration_mse->value()(0, 0), 0.0f, 1e-12f);
}

TEST(Model, ForwardTrainGradientCheck) {
    AcousticModel<double> m(ModelConfig::desk(), two_speakers(), 8);
    m.duration_mode = DurationMode::Mixture;
    m.speed_boundaries = SpeedBucketBoundaries{1, 2};
    std::mt19937_64 rng(3);
    // exercise the FP and router heads away from their zero initialisation
    m.parameters().at("fp_predictor.linear.weight").value = random_normal<double>(32, 3, 0.3, rng);
    m.parameters().at("router.linear.weight").value = random_normal<double>(32, 3, 0.3, rng);
    UtteranceRecord r;
    r.id = "three";
    r.speaker = "bob";
    r.phonemes = {"k", "<um>", "ae", "t"};
    r.durations = {1, 2, 2, 3};
    r.pitch = {0.3f, -0.5f, 0.2f, -0.1f};
    r.mel = random_normal<float>(8, 80, 0.5, rng);
    const auto ex = make_example(r, 1);
    auto forward = [&](Tape<double>& tape) { return m.forward_train(tape, ex).total(); };
    const auto result = gradient_check(forward, m.parameters(), 400, 1e-5, 11);
    EXPECT_LE(result.max_relative_error, 1e-4) << result.worst_parameter << "[" << result.worst_index << "]";
}

TEST(Model, SynthesizeFpDisabledAndThresholdOne) {
    Model m(ModelConfig::desk(), two_speakers(), 9);
    const auto ids = ids_of({"hh", "ay", "t", "ax"});
    SynthesisConfig off;
    off.fp_enabled = false;
    auto a = m.synthesize(ids, off);
    EXPECT_EQ(count_fp(a.fp_tags), 0u);
    EXPECT_EQ(a.durations.size(), 5u);
    SynthesisConfig all;
    all.fp_threshold = 1.0;
    auto b = m.synthesize(ids, all);
    EXPECT_EQ(count_fp(b.fp_tags), 5u);
    EXPECT_EQ(b.durations.size(), 10u);
    EXPECT_FALSE(b.warnings.empty());
    SynthesisConfig none;
    none.fp_threshold = 0.0;
    auto c = m.synthesize(ids, none);
    EXPECT_EQ(count_fp(c.fp_tags), 0u);
    EXPECT_TRUE(c.mel == a.mel);
}

TEST(Model, SynthesizeLengthConsistencyAndDeterminism) {
    Model m(ModelConfig::desk(), two_speakers(), 10);
    m.duration_mode = DurationMode::Mixture;
    SynthesisConfig cfg;
    cfg.fp_threshold = 0.7;
    cfg.speaker = "alice";
    const auto ids = ids_of({"s", "ow", "l", "ay", "k"});
    auto a = m.synthesize(ids, cfg);
    EXPECT_EQ(a.mel.rows(), std::accumulate(a.durations.begin(), a.durations.end(), Eigen::Index{0}));
    EXPECT_EQ(a.durations.size(), a.phoneme_ids.size() + count_fp(a.fp_tags));
    EXPECT_EQ(a.extended_symbols.size(), a.durations.size());
    auto b = m.synthesize(ids, cfg);
    EXPECT_TRUE(a.mel == b.mel);
    EXPECT_EQ(a.durations, b.durations);
}

TEST(Model, AddSpeakerUsesMeanRow) {
    Model m(ModelConfig::desk(), two_speakers(), 11);
    const Tensor<float> before = m.parameters().at("speaker_embedding").value;
    const int idx = m.add_speaker("carol");
    EXPECT_EQ(idx, 2);
    const auto& after = m.parameters().at("speaker_embedding").value;
    ASSERT_EQ(after.rows(), 3);
    EXPECT_LE((after.row(2) - before.colwise().mean()).cwiseAbs().maxCoeff(), 1e-7f);
    // the new row conditions exactly like the mean fallback
    Tape<float> tape;
    const auto ids = ids_of({"BOS", "hh"});
    auto x = m.encode(tape, ids, m.speaker_condition(tape, 2)).value();
    auto y = m.encode(tape, ids, m.speaker_condition(tape, -1)).value();
    EXPECT_LE((x - y).cwiseAbs().maxCoeff(), 1e-5f);
}

TEST(Model, CopyAndCastKeepValues) {
    Model m(ModelConfig::desk(), two_speakers(), 12);
    Model copy = m;
    EXPECT_NE(&copy.parameters().at("router.linear.bias"), &m.parameters().at("router.linear.bias"));
    auto d = m.cast<double>();
    const auto ids = ids_of({"hh", "ay"});
    SynthesisConfig cfg;
    cfg.fp_enabled = false;
    EXPECT_TRUE(copy.synthesize(ids, cfg).mel == m.synthesize(ids, cfg).mel);
    EXPECT_EQ(d.parameters().size(), m.parameters().size());
}

TEST(Model, ParameterNamesUseStagePrefixes) {
    Model m(ModelConfig::desk(), two_speakers(), 1);
    for (const char* name : {"phoneme_embedding", "fp_embedding", "speaker_embedding", "pitch_projection.weight",
                             "encoder.block0.attention.wq", "cln.encoder.block0.norm1.scale_weight",
                             "decoder.block1.ffn.w2", "cln.decoder.block1.norm2.shift_bias", "decoder.output.weight",
                             "fp_predictor.conv1.weight", "router.linear.bias", "duration_expert.slow.norm2.gamma"}) {
        EXPECT_TRUE(m.parameters().contains(name)) << name;
    }
}

}  // namespace
}  // namespace spontts
