#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "spontts/adaptation/checkpoint.hpp"
#include "spontts/adaptation/losses.hpp"
#include "spontts/adaptation/metrics.hpp"
#include "spontts/adaptation/training.hpp"
#include "spontts/corpus/datasets.hpp"
#include "spontts/corpus/io.hpp"
#include "spontts/corpus/synthetic.hpp"
#include "test_support.hpp"

namespace spontts {
namespace {

using Model = AcousticModel<float>;
using spontts::testing::ScratchDir;

template <typename F>
ErrorKind error_kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no spontts::Error thrown";
    return ErrorKind::Contract;
}

template <typename F>
std::string error_message_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    ADD_FAILURE() << "no spontts::Error thrown";
    return {};
}

std::vector<UtteranceRecord> reading_corpus(int n, std::uint64_t seed = 3) {
    SyntheticConfig c;
    c.style = Style::Reading;
    c.utterances = n;
    c.speaker_count = 2;
    return generate_synthetic_corpus(c, seed);
}

std::vector<UtteranceRecord> spontaneous_corpus(int n, std::uint64_t seed = 5) {
    SyntheticConfig c;
    c.style = Style::Spontaneous;
    c.utterances = n;
    c.speaker_count = 2;
    c.fp_rate = 0.1;
    return generate_synthetic_corpus(c, seed);
}

StageConfig quick(Stage stage, int steps = 3) {
    auto c = StageConfig::defaults(stage);
    c.steps = steps;
    c.batch_size = 2;
    return c;
}

Model fresh_model(std::uint64_t seed = 1) { return Model(ModelConfig::desk(), {"spk00", "spk01"}, seed); }

// ---- weighted cross entropy ----

TEST(WeightedCe, WorkedExampleUh) {
    RowVector<double> p(3);
    p << 0.25, 0.5, 0.25;
    const double oracle = -2.0 * std::log(0.5);
    EXPECT_NEAR(weighted_ce_loss(p, FpTag::Uh, 2.0), oracle, 1e-12);
    EXPECT_NEAR(weighted_ce_loss(p, FpTag::Uh, 2.0), 1.386294, 1e-6);
}

TEST(WeightedCe, CertainNoneIsZero) {
    RowVector<double> p(3);
    p << 1.0, 0.0, 0.0;
    EXPECT_EQ(weighted_ce_loss(p, FpTag::None, 5.0), 0.0);
}

TEST(WeightedCe, SigmaOneIsPlainCrossEntropy) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        RowVector<double> p(3);
        p << u(rng), u(rng), u(rng);
        p /= p.sum();
        for (int k = 0; k < 3; ++k) {
            EXPECT_DOUBLE_EQ(weighted_ce_loss(p, static_cast<FpTag>(k), 1.0), -std::log(p[k]));
        }
    }
}

TEST(WeightedCe, LinearInSigmaOnPositiveLabels) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        RowVector<double> p(3);
        p << u(rng), u(rng), u(rng);
        p /= p.sum();
        const double sigma = 0.5 + 9.5 * u(rng);
        for (auto tag : {FpTag::Uh, FpTag::Um}) {
            EXPECT_NEAR(weighted_ce_loss(p, tag, sigma), sigma * weighted_ce_loss(p, tag, 1.0), 1e-12);
        }
        EXPECT_DOUBLE_EQ(weighted_ce_loss(p, FpTag::None, sigma), weighted_ce_loss(p, FpTag::None, 1.0));
    }
}

TEST(WeightedCe, ZeroProbabilityIsFloored) {
    RowVector<double> p(3);
    p << 1.0, 0.0, 0.0;
    EXPECT_NEAR(weighted_ce_loss(p, FpTag::Um, 3.0), -3.0 * std::log(1e-12), 1e-9);
}

TEST(WeightedCe, NonPositiveSigmaIsConfigError) {
    RowVector<double> p(3);
    p << 0.2, 0.3, 0.5;
    EXPECT_EQ(error_kind_of([&] { weighted_ce_loss(p, FpTag::Uh, 0.0); }), ErrorKind::Config);
    EXPECT_EQ(error_kind_of([&] { weighted_ce_loss(p, FpTag::Uh, -1.0); }), ErrorKind::Config);
}

TEST(WeightedCe, GraphLossIsMeanOfRowLosses) {
    Tensor<double> probs(4, 3);
    probs << 0.7, 0.2, 0.1, 0.1, 0.8, 0.1, 0.3, 0.3, 0.4, 0.5, 0.25, 0.25;
    const std::vector<FpTag> tags = {FpTag::None, FpTag::Uh, FpTag::Um, FpTag::None};
    double oracle = 0.0;
    for (int i = 0; i < 4; ++i) oracle += weighted_ce_loss(RowVector<double>(probs.row(i)), tags[i], 5.0);
    Tape<double> tape;
    auto loss = weighted_ce_loss(tape.constant(probs), std::span<const FpTag>(tags), 5.0);
    EXPECT_NEAR(loss.value()(0, 0), oracle / 4.0, 1e-12);
}

// ---- stages ----

TEST(Stages, NamesRoundTrip) {
    for (auto s : {Stage::Source, Stage::Fp, Stage::Rhythm, Stage::Speaker}) EXPECT_EQ(parse_stage(to_string(s)), s);
    EXPECT_EQ(error_kind_of([] { parse_stage("warmup"); }), ErrorKind::Parse);
}

TEST(Stages, OrderRequiresPredecessor) {
    const std::vector<std::string> none;
    const std::vector<std::string> source = {"source"};
    const std::vector<std::string> fp = {"source", "fp"};
    EXPECT_NO_THROW(check_stage_order(Stage::Source, none));
    EXPECT_EQ(error_kind_of([&] { check_stage_order(Stage::Fp, none); }), ErrorKind::Order);
    EXPECT_NE(error_message_of([&] { check_stage_order(Stage::Fp, none); }).find("source"), std::string::npos);
    EXPECT_NO_THROW(check_stage_order(Stage::Fp, source));
    EXPECT_EQ(error_kind_of([&] { check_stage_order(Stage::Rhythm, source); }), ErrorKind::Order);
    EXPECT_NO_THROW(check_stage_order(Stage::Rhythm, fp));
    EXPECT_EQ(error_kind_of([&] { check_stage_order(Stage::Speaker, none); }), ErrorKind::Order);
    EXPECT_NO_THROW(check_stage_order(Stage::Speaker, source));
}

TEST(Stages, DefaultsPreserveStepRatios) {
    EXPECT_EQ(StageConfig::defaults(Stage::Source).steps, 2000);
    EXPECT_EQ(StageConfig::defaults(Stage::Fp).steps, 400);
    EXPECT_EQ(StageConfig::defaults(Stage::Rhythm).steps, 400);
    EXPECT_EQ(StageConfig::defaults(Stage::Speaker).steps, 200);
    EXPECT_DOUBLE_EQ(StageConfig::defaults(Stage::Source).warmup_fraction, 0.1);
    EXPECT_DOUBLE_EQ(StageConfig::defaults(Stage::Fp).sigma, 5.0);
}

TEST(Stages, InvalidConfigRejected) {
    auto model = fresh_model();
    const auto corpus = reading_corpus(2);
    auto c = quick(Stage::Source);
    c.steps = 0;
    EXPECT_EQ(error_kind_of([&] { train_source(model, corpus, c); }), ErrorKind::Config);
    c = quick(Stage::Source);
    c.trainable_prefixes = {"no_such_layer."};
    EXPECT_EQ(error_kind_of([&] { train_source(model, corpus, c); }), ErrorKind::Config);
    auto f = quick(Stage::Fp);
    f.sigma = 0.0;
    const auto ds = build_adaptation_datasets(spontaneous_corpus(6));
    EXPECT_EQ(error_kind_of([&] { adapt_fp(model, ds.spon_fp, f); }), ErrorKind::Config);
}

TEST(Stages, EmptyDataIsDataError) {
    auto model = fresh_model();
    EXPECT_EQ(error_kind_of([&] { train_source(model, {}, quick(Stage::Source)); }), ErrorKind::Data);
    EXPECT_EQ(error_kind_of([&] { adapt_fp(model, {}, quick(Stage::Fp)); }), ErrorKind::Data);
    EXPECT_EQ(error_kind_of([&] { adapt_rhythm(model, {}, quick(Stage::Rhythm)); }), ErrorKind::Data);
    EXPECT_EQ(error_kind_of([&] { adapt_speaker(model, {}, quick(Stage::Speaker)); }), ErrorKind::Data);
}

TEST(Training, WarmupRampsLinearly) {
    auto model = fresh_model();
    auto c = quick(Stage::Source, 10);
    c.warmup_fraction = 0.5;
    const auto report = train_source(model, reading_corpus(4), c);
    ASSERT_EQ(report.log.size(), 10u);
    for (int s = 0; s < 5; ++s) EXPECT_NEAR(report.log[s].learning_rate, c.learning_rate * (s + 1) / 5.0, 1e-15);
    for (int s = 5; s < 10; ++s) EXPECT_DOUBLE_EQ(report.log[s].learning_rate, c.learning_rate);
}

TEST(Training, LossesFiniteAndLogged) {
    auto model = fresh_model();
    const auto report = train_source(model, reading_corpus(4), quick(Stage::Source, 6));
    for (const auto& row : report.log) {
        EXPECT_TRUE(std::isfinite(row.total));
        EXPECT_EQ(row.losses.size(), 3u);
        EXPECT_NEAR(row.total, TrainingReport::sum(row.losses), 1e-6 * std::max(1.0, row.total));
    }
    const auto csv = training_log_csv(report.log);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,stage,learning_rate,duration_mse,mel_l1,pitch_mse,total");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(Training, SourceTrainingIsDeterministic) {
    const auto corpus = reading_corpus(4);
    auto a = fresh_model(4), b = fresh_model(4);
    train_source(a, corpus, quick(Stage::Source, 5));
    train_source(b, corpus, quick(Stage::Source, 5));
    EXPECT_EQ(parameter_hashes(a.parameters()), parameter_hashes(b.parameters()));
}

TEST(Training, SourceTrainingReducesLoss) {
    auto model = fresh_model();
    auto c = quick(Stage::Source, 60);
    const auto report = train_source(model, reading_corpus(4), c);
    EXPECT_LT(TrainingReport::sum(report.final), TrainingReport::sum(report.initial));
}

// Every parameter outside `prefixes` keeps its bytes; at least one inside changes.
void expect_frozen_outside(const std::map<std::string, std::string>& before,
                           const std::map<std::string, std::string>& after, const std::vector<std::string>& prefixes) {
    ASSERT_EQ(before.size(), after.size());
    bool changed_inside = false;
    for (const auto& [name, hash] : before) {
        const bool trainable =
            std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) { return has_prefix(name, p); });
        if (!trainable) {
            EXPECT_EQ(hash, after.at(name)) << name << " changed outside the trainable set";
        } else {
            changed_inside |= hash != after.at(name);
        }
    }
    EXPECT_TRUE(changed_inside);
}

TEST(Freezing, FpStageTouchesOnlyFpPredictor) {
    auto model = fresh_model();
    const auto ds = build_adaptation_datasets(spontaneous_corpus(8));
    const auto before = parameter_hashes(model.parameters());
    adapt_fp(model, ds.spon_fp, quick(Stage::Fp));
    expect_frozen_outside(before, parameter_hashes(model.parameters()), default_trainable_prefixes(Stage::Fp));
    EXPECT_TRUE(model.fp_adapted);
}

TEST(Freezing, RhythmStageTouchesOnlyRouterExpertsPitchAndFpEmbedding) {
    auto model = fresh_model();
    const auto ds = build_adaptation_datasets(spontaneous_corpus(8));
    model.init_experts_from_duration_predictor();
    const auto before = parameter_hashes(model.parameters());
    adapt_rhythm(model, ds.spon_rhythm, quick(Stage::Rhythm));
    expect_frozen_outside(before, parameter_hashes(model.parameters()), default_trainable_prefixes(Stage::Rhythm));
    EXPECT_EQ(model.duration_mode, DurationMode::Mixture);
    ASSERT_TRUE(model.speed_boundaries.has_value());
}

TEST(Freezing, SpeakerStageTouchesOnlyNormsAndTargetRow) {
    auto model = fresh_model();
    const auto ds = build_adaptation_datasets(spontaneous_corpus(8));
    const auto embedding_before = model.parameters().at("speaker_embedding").value;
    const auto before = parameter_hashes(model.parameters());
    auto c = quick(Stage::Speaker);
    c.target_speaker = ds.spon_timbre.front().speaker;
    adapt_speaker(model, ds.spon_timbre, c);
    expect_frozen_outside(before, parameter_hashes(model.parameters()), default_trainable_prefixes(Stage::Speaker));
    const int target = model.speaker_index(c.target_speaker);
    const auto& after = model.parameters().at("speaker_embedding").value;
    for (Eigen::Index r = 0; r < after.rows(); ++r) {
        const bool same = (after.row(r).array() == embedding_before.row(r).array()).all();
        EXPECT_EQ(same, r != target) << "row " << r;
    }
}

TEST(Freezing, UnknownSpeakerGetsMeanRowThenAdapts) {
    auto model = fresh_model();
    SyntheticConfig c;
    c.style = Style::Spontaneous;
    c.utterances = 3;
    c.speakers = {"newcomer"};
    const auto timbre = generate_synthetic_corpus(c, 2);
    const Tensor<float> mean = model.parameters().at("speaker_embedding").value.colwise().mean();
    auto sc = quick(Stage::Speaker, 1);
    sc.learning_rate = 1e-12;
    adapt_speaker(model, timbre, sc);
    ASSERT_EQ(model.speakers().size(), 3u);
    EXPECT_EQ(model.speaker_index("newcomer"), 2);
    const auto row = model.parameters().at("speaker_embedding").value.row(2);
    EXPECT_LT((row - mean).cwiseAbs().maxCoeff(), 1e-6f);
}

TEST(Rhythm, ExpertsMatchSourcePredictorAtInitialisation) {
    auto model = fresh_model(6);
    train_source(model, reading_corpus(4), quick(Stage::Source, 5));
    model.init_experts_from_duration_predictor();
    Tape<float> tape;
    const std::vector<int> ids = {0, 5, 9, 14, 20};
    auto h = model.encode(tape, ids, model.speaker_condition(tape, 0));
    const auto single = model.single_log_duration(h).value();
    for (auto e : {SpeedTag::Fast, SpeedTag::Medium, SpeedTag::Slow}) {
        EXPECT_TRUE((model.expert_log_duration(h, e).value().array() == single.array()).all());
    }
}

TEST(Rhythm, EmptyBucketIsNamed) {
    auto model = fresh_model();
    auto records = reading_corpus(2);
    for (auto& r : records) std::fill(r.durations.begin(), r.durations.end(), 4);
    for (auto& r : records) r.mel.reset();
    const auto msg = error_message_of([&] { adapt_rhythm(model, records, quick(Stage::Rhythm)); });
    EXPECT_NE(msg.find("fast"), std::string::npos) << msg;
}

TEST(Rhythm, FittingDurationsSkipBos) {
    UtteranceRecord r;
    r.phonemes = {std::string(kBosSymbol), "hh", "ay"};
    r.durations = {0, 3, 7};
    const std::vector<UtteranceRecord> rs = {r};
    EXPECT_EQ(fitting_durations(rs), (std::vector<int>{3, 7}));
}

// ---- metrics ----

FpMetrics brute_force_metrics(const std::vector<std::vector<FpTag>>& gold,
                              const std::vector<std::vector<FpTag>>& pred) {
    double tok_tp = 0, tok_pred = 0, gold_pos = 0, tok_ok = 0, pres_tp = 0, pres_ok = 0, n = 0;
    double s_tp = 0, s_pred = 0, s_gold = 0, s_ok = 0;
    FpMetrics m;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        bool g_any = false, p_any = false;
        for (std::size_t i = 0; i < gold[s].size(); ++i) {
            const auto g = gold[s][i], p = pred[s][i];
            n += 1;
            if (g != FpTag::None) gold_pos += 1, g_any = true;
            if (p != FpTag::None) tok_pred += 1, p_any = true, m.fp_count += 1;
            if (p != FpTag::None && p == g) tok_tp += 1;
            if (p == g) tok_ok += 1;
            if (p != FpTag::None && g != FpTag::None) pres_tp += 1;
            if ((p != FpTag::None) == (g != FpTag::None)) pres_ok += 1;
        }
        s_gold += g_any;
        s_pred += p_any;
        s_tp += g_any && p_any;
        s_ok += g_any == p_any;
    }
    auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
    m.token = {ratio(tok_tp, gold_pos), ratio(tok_tp, tok_pred), ratio(tok_ok, n)};
    m.presence = {ratio(pres_tp, gold_pos), ratio(pres_tp, tok_pred), ratio(pres_ok, n)};
    m.sentence = {ratio(s_tp, s_gold), ratio(s_tp, s_pred), ratio(s_ok, static_cast<double>(gold.size()))};
    return m;
}

void expect_same(const DetectionMetrics& a, const DetectionMetrics& b) {
    EXPECT_NEAR(a.recall, b.recall, 1e-12);
    EXPECT_NEAR(a.precision, b.precision, 1e-12);
    EXPECT_NEAR(a.accuracy, b.accuracy, 1e-12);
}

TEST(Metrics, MatchBruteForceOracle) {
    std::mt19937_64 rng(12);
    std::discrete_distribution<int> tag({0.8, 0.15, 0.05});
    std::uniform_int_distribution<int> len(1, 12);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<FpTag>> gold, pred;
        for (int s = 0; s < 6; ++s) {
            const int n = len(rng);
            gold.emplace_back();
            pred.emplace_back();
            for (int i = 0; i < n; ++i) {
                gold.back().push_back(static_cast<FpTag>(tag(rng)));
                pred.back().push_back(static_cast<FpTag>(tag(rng)));
            }
        }
        const auto got = fp_metrics(gold, pred);
        const auto want = brute_force_metrics(gold, pred);
        expect_same(got.token, want.token);
        expect_same(got.presence, want.presence);
        expect_same(got.sentence, want.sentence);
        EXPECT_EQ(got.fp_count, want.fp_count);
    }
}

TEST(Metrics, AllNonePredictionGivesZeroRecall) {
    const std::vector<std::vector<FpTag>> gold = {{FpTag::None, FpTag::Uh, FpTag::None, FpTag::None}};
    const std::vector<std::vector<FpTag>> pred = {{FpTag::None, FpTag::None, FpTag::None, FpTag::None}};
    const auto m = fp_metrics(gold, pred);
    EXPECT_EQ(m.token.recall, 0.0);
    EXPECT_EQ(m.token.precision, 0.0);
    EXPECT_DOUBLE_EQ(m.token.accuracy, 0.75);
    EXPECT_EQ(m.fp_count, 0u);
}

TEST(Metrics, PerfectPredictorScoresOne) {
    const std::vector<std::vector<FpTag>> gold = {{FpTag::None, FpTag::Uh}, {FpTag::Um, FpTag::None}};
    const auto m = fp_metrics(gold, gold);
    for (const auto* d : {&m.token, &m.presence, &m.sentence}) {
        EXPECT_EQ(d->recall, 1.0);
        EXPECT_EQ(d->precision, 1.0);
        EXPECT_EQ(d->accuracy, 1.0);
    }
}

TEST(Metrics, DefaultGrid) {
    const auto g = default_threshold_grid();
    ASSERT_EQ(g.size(), 11u);
    EXPECT_DOUBLE_EQ(g.front(), 0.1);
    EXPECT_DOUBLE_EQ(g[8], 0.9);
    EXPECT_DOUBLE_EQ(g[9], 0.95);
    EXPECT_DOUBLE_EQ(g.back(), 0.99);
    EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
}

TEST(Metrics, SweepRecallAndCountMonotone) {
    auto model = fresh_model(3);
    const auto ds = build_adaptation_datasets(spontaneous_corpus(10));
    auto c = quick(Stage::Fp, 20);
    adapt_fp(model, ds.spon_fp, c);
    const auto ex = prepare_examples(model, ds.spon_fp);
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
    const auto rows = fp_threshold_sweep(model, ex, grid);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_GE(rows[i].metrics.token.recall, rows[i - 1].metrics.token.recall);
        EXPECT_GE(rows[i].metrics.presence.recall, rows[i - 1].metrics.presence.recall);
        EXPECT_GE(rows[i].metrics.fp_count, rows[i - 1].metrics.fp_count);
    }
    EXPECT_EQ(rows.front().metrics.fp_count, 0u);
    const auto csv = fp_sweep_csv(rows);
    EXPECT_EQ(csv.substr(0, 22), "threshold,token_recall");
    EXPECT_EQ(error_kind_of([&] { fp_threshold_sweep(model, {}, grid); }), ErrorKind::Data);
}

// ---- checkpoint ----

Checkpoint trained_checkpoint() {
    auto model = fresh_model(7);
    const auto report = train_source(model, reading_corpus(3), quick(Stage::Source, 4));
    return Checkpoint{model, report.optimizer, {"source"}, "cfg-hash-a", 7, {}};
}

TEST(Checkpoint, RoundTripIsBitExact) {
    ScratchDir dir("ckpt_roundtrip");
    auto ck = trained_checkpoint();
    ck.model.speed_boundaries = SpeedBucketBoundaries{3, 9};
    ck.model.duration_mode = DurationMode::Mixture;
    save_checkpoint(dir.path(), ck);
    auto loaded = load_checkpoint(dir.path(), "cfg-hash-a");
    EXPECT_TRUE(loaded.warnings.empty());
    EXPECT_EQ(parameter_hashes(loaded.model.parameters()), parameter_hashes(ck.model.parameters()));
    EXPECT_EQ(loaded.stage_history, ck.stage_history);
    EXPECT_EQ(loaded.seed, 7u);
    EXPECT_EQ(loaded.model.speakers(), ck.model.speakers());
    EXPECT_EQ(loaded.model.duration_mode, DurationMode::Mixture);
    ASSERT_TRUE(loaded.model.speed_boundaries.has_value());
    EXPECT_EQ(loaded.model.speed_boundaries->t2, 9);
    EXPECT_EQ(loaded.optimizer.step_count, ck.optimizer.step_count);
    ASSERT_EQ(loaded.optimizer.moments.size(), ck.optimizer.moments.size());
    for (const auto& [name, mom] : ck.optimizer.moments) {
        EXPECT_EQ(tensor_sha256(loaded.optimizer.moments.at(name).m), tensor_sha256(mom.m));
        EXPECT_EQ(tensor_sha256(loaded.optimizer.moments.at(name).v), tensor_sha256(mom.v));
    }

    const std::vector<int> ids = {0, 4, 8, 15, 16, 23};
    SynthesisConfig sc;
    sc.speaker = "spk01";
    const auto a = ck.model.synthesize(ids, sc);
    const auto b = loaded.model.synthesize(ids, sc);
    EXPECT_EQ(a.durations, b.durations);
    ASSERT_EQ(a.mel.rows(), b.mel.rows());
    EXPECT_EQ(tensor_sha256(a.mel), tensor_sha256(b.mel));
}

TEST(Checkpoint, SavingTwiceGivesIdenticalDigest) {
    ScratchDir a("ckpt_digest_a"), b("ckpt_digest_b");
    save_checkpoint(a.path(), trained_checkpoint());
    save_checkpoint(b.path(), trained_checkpoint());
    EXPECT_EQ(checkpoint_digest(a.path()), checkpoint_digest(b.path()));
}

TEST(Checkpoint, ConfigHashMismatchWarns) {
    ScratchDir dir("ckpt_hash");
    save_checkpoint(dir.path(), trained_checkpoint());
    const auto loaded = load_checkpoint(dir.path(), "cfg-hash-b");
    ASSERT_EQ(loaded.warnings.size(), 1u);
    EXPECT_NE(loaded.warnings[0].find("cfg-hash-a"), std::string::npos);
}

TEST(Checkpoint, TruncatedBlobNamesTensor) {
    ScratchDir dir("ckpt_trunc");
    const auto manifest = save_checkpoint(dir.path(), trained_checkpoint());
    const auto blob = dir.path() / kCheckpointBlob;
    const auto& last = manifest.tensors.back();
    std::filesystem::resize_file(blob, last.offset + last.bytes - 4);
    const auto msg = error_message_of([&] { load_checkpoint(dir.path()); });
    EXPECT_NE(msg.find(last.name), std::string::npos) << msg;
    EXPECT_EQ(error_kind_of([&] { load_checkpoint(dir.path()); }), ErrorKind::Integrity);
}

TEST(Checkpoint, CorruptByteNamesTensor) {
    ScratchDir dir("ckpt_corrupt");
    const auto manifest = save_checkpoint(dir.path(), trained_checkpoint());
    const auto& victim = manifest.tensors[3];
    {
        std::fstream f(dir.path() / kCheckpointBlob, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(static_cast<std::streamoff>(victim.offset));
        const char junk[4] = {0x7f, 0x7f, 0x7f, 0x7f};
        f.write(junk, 4);
    }
    const auto msg = error_message_of([&] { load_checkpoint(dir.path()); });
    EXPECT_NE(msg.find(victim.name), std::string::npos) << msg;
}

TEST(Checkpoint, MissingAndWrongVersionRejected) {
    ScratchDir dir("ckpt_version");
    EXPECT_EQ(error_kind_of([&] { load_checkpoint(dir.path() / "absent"); }), ErrorKind::Io);
    save_checkpoint(dir.path(), trained_checkpoint());
    auto text = read_text_file(dir.path() / kCheckpointManifest);
    const auto pos = text.find("\"format_version\": 1");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 19, "\"format_version\": 9");
    write_text_file(dir.path() / kCheckpointManifest, text);
    EXPECT_EQ(error_kind_of([&] { load_checkpoint(dir.path()); }), ErrorKind::Integrity);
}

TEST(Checkpoint, OffsetsAreContiguousAndDisjoint) {
    ScratchDir dir("ckpt_offsets");
    const auto m = save_checkpoint(dir.path(), trained_checkpoint());
    std::uint64_t next = 0;
    for (const auto* list : {&m.tensors, &m.optimizer}) {
        for (const auto& e : *list) {
            EXPECT_EQ(e.offset, next) << e.name;
            next = e.offset + e.bytes;
        }
    }
    EXPECT_EQ(std::filesystem::file_size(dir.path() / kCheckpointBlob), next);
}

}  // namespace
}  // namespace spontts
