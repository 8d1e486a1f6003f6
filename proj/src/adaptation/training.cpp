#include "spontts/adaptation/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "spontts/error.hpp"

namespace spontts {

namespace {

constexpr std::uint64_t kStepSeedMix = 0x9E3779B97F4A7C15ULL;

// Frozen rows of a trainable table: gradients there are zeroed before the
// optimizer sees them.
struct RowMask {
    std::string parameter;
    int keep_row = -1;
};

std::vector<Parameter<float>*> trainable(AcousticModel<float>& model, const std::vector<std::string>& prefixes) {
    auto params = model.parameters().with_prefixes(prefixes);
    for (const auto& prefix : prefixes) {
        const bool hit = std::any_of(params.begin(), params.end(),
                                     [&](const Parameter<float>* p) { return has_prefix(p->name, prefix); });
        require(hit, ErrorKind::Config, "trainable prefix '" + prefix + "' matches no parameter");
    }
    return params;
}

double learning_rate_at(const StageConfig& c, int step) {
    const int warmup = static_cast<int>(std::floor(c.warmup_fraction * c.steps));
    if (warmup > 0 && step < warmup) return c.learning_rate * static_cast<double>(step + 1) / warmup;
    return c.learning_rate;
}

}  // namespace

void StageConfig::validate() const {
    const StageConfig& c = *this;
    require(c.steps > 0, ErrorKind::Config, "steps must be positive");
    require(c.learning_rate > 0.0, ErrorKind::Config, "learning rate must be positive");
    require(c.batch_size >= 1, ErrorKind::Config, "batch size must be at least 1");
    require(c.sigma > 0.0, ErrorKind::Config, "sigma must be positive");
    require(c.warmup_fraction >= 0.0 && c.warmup_fraction <= 1.0, ErrorKind::Config,
            "warmup fraction must lie in [0, 1]");
}

namespace {

// Shared optimisation loop: shuffled epochs of mini-batches, gradients
// averaged over the batch, one Adam step per batch on `params` only.
TrainingReport run_stage(AcousticModel<float>& model, std::span<const TrainingExample> examples,
                         const StageConfig& cfg, const LossSelection& selection,
                         const std::vector<std::string>& prefixes, const std::optional<RowMask>& mask = {}) {
    cfg.validate();
    require(!examples.empty(), ErrorKind::Data, std::string(to_string(cfg.stage)) + " stage has no training data");
    auto params = trainable(model, prefixes);
    TrainingReport report;
    report.optimizer.config.learning_rate = cfg.learning_rate;
    report.initial = evaluate_losses(model, examples, selection);

    std::mt19937_64 order_rng(cfg.seed);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();
    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), examples.size());

    for (int step = 0; step < cfg.steps; ++step) {
        model.parameters().zero_grad();
        LogRow row;
        row.step = step;
        row.stage = cfg.stage;
        row.learning_rate = learning_rate_at(cfg, step);
        for (std::size_t b = 0; b < batch; ++b) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), order_rng);
                cursor = 0;
            }
            const auto& ex = examples[order[cursor++]];
            Tape<float> tape(true, cfg.seed ^ (kStepSeedMix * static_cast<std::uint64_t>(step * 131 + b + 1)));
            auto losses = model.forward_train(tape, ex, selection);
            auto total = losses.total();
            for (const auto& [k, v] : losses.values()) row.losses[k] += v / static_cast<double>(batch);
            row.total += static_cast<double>(total.value()(0, 0)) / static_cast<double>(batch);
            tape.backprop(total);
        }
        require(std::isfinite(row.total), ErrorKind::State,
                std::string(to_string(cfg.stage)) + " loss became non-finite at step " + std::to_string(step));
        const float inv = 1.0f / static_cast<float>(batch);
        for (auto* p : params) {
            p->grad *= inv;
            if (mask && p->name == mask->parameter) {
                for (Eigen::Index r = 0; r < p->grad.rows(); ++r) {
                    if (r != mask->keep_row) p->grad.row(r).setZero();
                }
            }
        }
        report.optimizer.config.learning_rate = row.learning_rate;
        adam_step<float>(params, report.optimizer);
        report.log.push_back(std::move(row));
    }
    report.optimizer.config.learning_rate = cfg.learning_rate;
    model.parameters().zero_grad();
    report.final = evaluate_losses(model, examples, selection);
    return report;
}

std::vector<std::string> prefixes_for(const StageConfig& c) {
    return c.trainable_prefixes.empty() ? default_trainable_prefixes(c.stage) : c.trainable_prefixes;
}

}  // namespace

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::Source: return "source";
        case Stage::Fp: return "fp";
        case Stage::Rhythm: return "rhythm";
        case Stage::Speaker: return "speaker";
    }
    return "unknown";
}

Stage parse_stage(std::string_view text) {
    for (auto s : {Stage::Source, Stage::Fp, Stage::Rhythm, Stage::Speaker}) {
        if (to_string(s) == text) return s;
    }
    fail(ErrorKind::Parse, "unknown stage '" + std::string(text) + "'");
}

std::vector<std::string> default_trainable_prefixes(Stage stage) {
    switch (stage) {
        case Stage::Source:
            return {"phoneme_embedding", "speaker_embedding", "pitch_projection.", "encoder.", "decoder.",
                    "cln.",              "pitch_predictor.",  "duration_predictor."};
        case Stage::Fp: return {"fp_predictor."};
        case Stage::Rhythm: return {"router.", "duration_expert.", "pitch_predictor.", "fp_embedding"};
        case Stage::Speaker: return {"cln.", "speaker_embedding"};
    }
    return {};
}

std::optional<Stage> required_predecessor(Stage stage) {
    switch (stage) {
        case Stage::Source: return std::nullopt;
        case Stage::Fp: return Stage::Source;
        case Stage::Rhythm: return Stage::Fp;
        case Stage::Speaker: return Stage::Source;
    }
    return std::nullopt;
}

void check_stage_order(Stage stage, std::span<const std::string> history) {
    const auto needed = required_predecessor(stage);
    if (!needed) return;
    const bool present = std::find(history.begin(), history.end(), to_string(*needed)) != history.end();
    require(present, ErrorKind::Order,
            "stage '" + std::string(to_string(stage)) + "' requires stage '" + std::string(to_string(*needed)) +
                "' in the checkpoint history");
}

StageConfig StageConfig::defaults(Stage stage) {
    StageConfig c;
    c.stage = stage;
    switch (stage) {
        case Stage::Source:
            c.steps = 2000;
            c.learning_rate = 1e-3;
            c.warmup_fraction = 0.1;
            break;
        case Stage::Fp: c.steps = 400; c.learning_rate = 1e-3; break;
        case Stage::Rhythm: c.steps = 400; c.learning_rate = 1e-3; break;
        case Stage::Speaker: c.steps = 200; c.learning_rate = 1e-4; break;
    }
    return c;
}

double TrainingReport::sum(const std::map<std::string, double>& losses) {
    double s = 0.0;
    for (const auto& [k, v] : losses) s += v;
    return s;
}

std::string training_log_csv(std::span<const LogRow> log) {
    std::set<std::string> names;
    for (const auto& r : log) {
        for (const auto& [k, v] : r.losses) names.insert(k);
    }
    std::string out = "step,stage,learning_rate";
    for (const auto& n : names) out += "," + n;
    out += ",total\n";
    char buf[64];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof(buf), "%d,%s,%.9g", r.step, std::string(to_string(r.stage)).c_str(), r.learning_rate);
        out += buf;
        for (const auto& n : names) {
            auto it = r.losses.find(n);
            if (it == r.losses.end()) {
                out += ",";
            } else {
                std::snprintf(buf, sizeof(buf), ",%.9g", it->second);
                out += buf;
            }
        }
        std::snprintf(buf, sizeof(buf), ",%.9g\n", r.total);
        out += buf;
    }
    return out;
}

std::vector<TrainingExample> prepare_examples(const AcousticModel<float>& model,
                                              std::span<const UtteranceRecord> records) {
    std::vector<UtteranceRecord> copy(records.begin(), records.end());
    normalize_pitch_per_speaker(copy);
    std::vector<TrainingExample> out;
    out.reserve(copy.size());
    for (const auto& r : copy) out.push_back(make_example(r, model.speaker_index(r.speaker)));
    return out;
}

std::vector<TrainingExample> prepare_examples(const AcousticModel<float>& model, std::span<const FpRecord> records) {
    std::vector<TrainingExample> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(make_example(r, model.speaker_index(r.speaker)));
    return out;
}

std::map<std::string, double> evaluate_losses(AcousticModel<float>& model, std::span<const TrainingExample> examples,
                                              const LossSelection& selection) {
    std::map<std::string, double> sums;
    for (const auto& ex : examples) {
        Tape<float> tape(false);
        for (const auto& [k, v] : model.forward_train(tape, ex, selection).values()) sums[k] += v;
    }
    for (auto& [k, v] : sums) v /= static_cast<double>(std::max<std::size_t>(1, examples.size()));
    return sums;
}

std::vector<int> fitting_durations(std::span<const UtteranceRecord> records) {
    std::vector<int> out;
    for (const auto& r : records) {
        for (std::size_t i = 0; i < r.phonemes.size(); ++i) {
            if (r.phonemes[i] != kBosSymbol) out.push_back(r.durations[i]);
        }
    }
    return out;
}

TrainingReport train_source(AcousticModel<float>& model, std::span<const UtteranceRecord> corpus,
                            const StageConfig& config) {
    require(!corpus.empty(), ErrorKind::Data, "source training needs a non-empty corpus");
    const auto examples = prepare_examples(model, corpus);
    LossSelection sel;
    sel.fp = false;
    sel.router = false;
    sel.duration_target = DurationTarget::Single;
    return run_stage(model, examples, config, sel, prefixes_for(config));
}

TrainingReport adapt_fp(AcousticModel<float>& model, std::span<const FpRecord> spon_fp, const StageConfig& config) {
    require(!spon_fp.empty(), ErrorKind::Data, "FP adaptation needs a non-empty SPON-FP set");
    const auto examples = prepare_examples(model, spon_fp);
    LossSelection sel = LossSelection::none();
    sel.fp = true;
    sel.sigma = config.sigma;
    auto report = run_stage(model, examples, config, sel, prefixes_for(config));
    model.fp_adapted = true;
    return report;
}

TrainingReport adapt_rhythm(AcousticModel<float>& model, std::span<const UtteranceRecord> spon_rhythm,
                            const StageConfig& config) {
    require(!spon_rhythm.empty(), ErrorKind::Data, "rhythm adaptation needs a non-empty SPON-RHYTHM set");
    const auto durations = fitting_durations(spon_rhythm);
    const auto boundaries = compute_speed_buckets(durations);
    std::size_t counts[3] = {0, 0, 0};
    for (int d : durations) ++counts[static_cast<int>(assign_speed_tag(d, boundaries))];
    for (auto tag : {SpeedTag::Fast, SpeedTag::Medium, SpeedTag::Slow}) {
        require(counts[static_cast<int>(tag)] > 0, ErrorKind::Data,
                "speed bucket '" + std::string(to_string(tag)) + "' has no positions (t1=" +
                    std::to_string(boundaries.t1) + ", t2=" + std::to_string(boundaries.t2) + ")");
    }
    model.speed_boundaries = boundaries;
    model.init_experts_from_duration_predictor();
    model.duration_mode = DurationMode::Mixture;

    const auto examples = prepare_examples(model, spon_rhythm);
    LossSelection sel = LossSelection::none();
    sel.duration = true;
    sel.duration_target = DurationTarget::Routed;
    sel.router = true;
    sel.pitch = true;
    return run_stage(model, examples, config, sel, prefixes_for(config));
}

TrainingReport adapt_speaker(AcousticModel<float>& model, std::span<const UtteranceRecord> spon_timbre,
                             const StageConfig& config) {
    require(!spon_timbre.empty(), ErrorKind::Data, "speaker adaptation needs a non-empty SPON-TIMBRE set");
    std::string target = config.target_speaker.empty() ? spon_timbre.front().speaker : config.target_speaker;
    std::vector<UtteranceRecord> records;
    for (const auto& r : spon_timbre) {
        require(r.mel.has_value(), ErrorKind::Data, "speaker adaptation record " + r.id + " has no mel");
        if (r.speaker == target) records.push_back(r);
    }
    require(!records.empty(), ErrorKind::Data, "no adaptation records for speaker '" + target + "'");
    int index = model.speaker_index(target);
    if (index < 0) index = model.add_speaker(target);

    const auto examples = prepare_examples(model, records);
    LossSelection sel = LossSelection::none();
    sel.mel = true;
    return run_stage(model, examples, config, sel, prefixes_for(config), RowMask{"speaker_embedding", index});
}

}  // namespace spontts
