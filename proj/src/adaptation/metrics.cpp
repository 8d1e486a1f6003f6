#include "spontts/adaptation/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "spontts/error.hpp"

namespace spontts {

namespace {

struct Counts {
    std::size_t tp = 0, predicted = 0, gold = 0, correct = 0, total = 0;

    DetectionMetrics finish() const {
        DetectionMetrics m;
        m.recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
        m.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        m.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
        return m;
    }
};

bool any_fp(const std::vector<FpTag>& tags) { return count_fp(tags) > 0; }

// Extended-sequence indices that are not BOS. BOS is always position 0.
template <typename F>
void for_real_positions(const TrainingExample& ex, F&& f) {
    for (std::size_t i = 1; i < ex.extended_length(); ++i) f(static_cast<Eigen::Index>(i));
}

}  // namespace

FpMetrics fp_metrics(std::span<const std::vector<FpTag>> gold, std::span<const std::vector<FpTag>> predicted) {
    require(gold.size() == predicted.size(), ErrorKind::Dimension, "gold and predicted sentence counts differ");
    Counts token, presence, sentence;
    FpMetrics out;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        const auto& g = gold[s];
        const auto& p = predicted[s];
        require(g.size() == p.size(), ErrorKind::Dimension, "gold and predicted tag counts differ");
        for (std::size_t i = 0; i < g.size(); ++i) {
            const bool gp = g[i] != FpTag::None, pp = p[i] != FpTag::None;
            token.gold += gp;
            token.predicted += pp;
            token.tp += pp && p[i] == g[i];
            token.correct += p[i] == g[i];
            presence.gold += gp;
            presence.predicted += pp;
            presence.tp += gp && pp;
            presence.correct += gp == pp;
        }
        token.total += g.size();
        presence.total += g.size();
        out.fp_count += count_fp(p);
        const bool gs = any_fp(g), ps = any_fp(p);
        sentence.gold += gs;
        sentence.predicted += ps;
        sentence.tp += gs && ps;
        sentence.correct += gs == ps;
        ++sentence.total;
    }
    out.token = token.finish();
    out.presence = presence.finish();
    out.sentence = sentence.finish();
    out.positions = token.total;
    out.sentences = gold.size();
    return out;
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 9; ++i) grid.push_back(i / 10.0);
    grid.push_back(0.95);
    grid.push_back(0.99);
    return grid;
}

std::vector<Tensor<float>> fp_probabilities(AcousticModel<float>& model, std::span<const TrainingExample> examples) {
    std::vector<Tensor<float>> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
        Tape<float> tape(false);
        Var<float> hidden = model.encode(tape, ex.phoneme_ids, model.speaker_condition(tape, ex.speaker));
        out.push_back(model.predict_fp_probs(hidden).value());
    }
    return out;
}

std::vector<FpSweepRow> fp_threshold_sweep(AcousticModel<float>& model, std::span<const TrainingExample> examples,
                                           std::span<const double> thresholds) {
    require(!examples.empty(), ErrorKind::Data, "FP evaluation needs a non-empty test set");
    require(!thresholds.empty(), ErrorKind::Config, "FP evaluation needs at least one threshold");
    const auto probs = fp_probabilities(model, examples);
    std::vector<std::vector<FpTag>> gold;
    for (const auto& ex : examples) gold.push_back(ex.tags);
    std::vector<FpSweepRow> rows;
    for (double t : thresholds) {
        require(t >= 0.0 && t <= 1.0, ErrorKind::Config, "FP threshold must lie in [0, 1]");
        std::vector<std::vector<FpTag>> predicted;
        for (const auto& p : probs) predicted.push_back(decide_fp_tags(p, t));
        rows.push_back({t, fp_metrics(gold, predicted)});
    }
    return rows;
}

std::string fp_sweep_csv(std::span<const FpSweepRow> rows) {
    std::string out =
        "threshold,token_recall,token_precision,token_accuracy,presence_recall,presence_precision,"
        "presence_accuracy,sentence_recall,sentence_precision,sentence_accuracy,fp_count\n";
    char buf[256];
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        std::snprintf(buf, sizeof(buf), "%.2f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%zu\n", r.threshold,
                      m.token.recall, m.token.precision, m.token.accuracy, m.presence.recall, m.presence.precision,
                      m.presence.accuracy, m.sentence.recall, m.sentence.precision, m.sentence.accuracy, m.fp_count);
        out += buf;
    }
    return out;
}

double teacher_forced_mel_l1(AcousticModel<float>& model, std::span<const TrainingExample> examples) {
    LossSelection sel = LossSelection::none();
    sel.mel = true;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& ex : examples) {
        if (!ex.mel) continue;
        Tape<float> tape(false);
        sum += model.forward_train(tape, ex, sel).values().at("mel_l1");
        ++n;
    }
    require(n > 0, ErrorKind::Data, "no examples with mel to evaluate");
    return sum / static_cast<double>(n);
}

double router_accuracy(AcousticModel<float>& model, std::span<const TrainingExample> examples) {
    require(model.speed_boundaries.has_value(), ErrorKind::State, "router accuracy needs fitted speed buckets");
    std::size_t hit = 0, total = 0;
    for (const auto& ex : examples) {
        require(ex.has_prosody(), ErrorKind::Data, ex.id + ": router accuracy needs durations");
        Tape<float> tape(false);
        Var<float> hidden = model.encode(tape, ex.phoneme_ids, model.speaker_condition(tape, ex.speaker));
        const Tensor<float> probs = model.route_speed(model.insert_fp_embeddings(hidden, ex.tags)).value();
        for_real_positions(ex, [&](Eigen::Index i) {
            Eigen::Index arg = 0;
            probs.row(i).maxCoeff(&arg);
            hit += static_cast<int>(arg) ==
                   static_cast<int>(assign_speed_tag(ex.durations[static_cast<std::size_t>(i)], *model.speed_boundaries));
            ++total;
        });
    }
    require(total > 0, ErrorKind::Data, "no positions to evaluate");
    return static_cast<double>(hit) / static_cast<double>(total);
}

double log_duration_mse(AcousticModel<float>& model, std::span<const TrainingExample> examples, DurationMode mode) {
    double sum = 0.0;
    std::size_t total = 0;
    for (const auto& ex : examples) {
        require(ex.has_prosody(), ErrorKind::Data, ex.id + ": duration MSE needs durations");
        Tape<float> tape(false);
        Var<float> hidden = model.encode(tape, ex.phoneme_ids, model.speaker_condition(tape, ex.speaker));
        Var<float> extended = model.insert_fp_embeddings(hidden, ex.tags);
        const Tensor<float> pred = (mode == DurationMode::Mixture ? model.moe_predict_duration(extended)
                                                                  : model.single_log_duration(extended))
                                       .value();
        for_real_positions(ex, [&](Eigen::Index i) {
            const double e = pred(i, 0) - std::log1p(static_cast<double>(ex.durations[static_cast<std::size_t>(i)]));
            sum += e * e;
            ++total;
        });
    }
    require(total > 0, ErrorKind::Data, "no positions to evaluate");
    return sum / static_cast<double>(total);
}

}  // namespace spontts
