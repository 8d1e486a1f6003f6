#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spontts/corpus/record.hpp"
#include "spontts/model/model.hpp"
#include "spontts/numerics/adam.hpp"

namespace spontts {

enum class Stage { Source, Fp, Rhythm, Speaker };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);

// Name prefixes a stage may update; everything else stays bit-identical.
std::vector<std::string> default_trainable_prefixes(Stage stage);

// The stage that must already appear in a checkpoint's history.
std::optional<Stage> required_predecessor(Stage stage);
void check_stage_order(Stage stage, std::span<const std::string> history);

struct StageConfig {
    Stage stage = Stage::Source;
    int steps = 0;
    double learning_rate = 0.0;
    int batch_size = 4;
    double sigma = 5.0;
    double warmup_fraction = 0.0;  // linear warmup over this share of steps
    std::uint64_t seed = 1;
    std::vector<std::string> trainable_prefixes;  // empty: stage default
    std::string target_speaker;                   // speaker stage only

    // Desk-scale defaults: steps 2000/400/400/200. Learning rate 1e-3 with
    // 10% warmup for source training, 1e-3 constant for the zero-initialised
    // FP and rhythm heads, 1e-4 constant for speaker adaptation.
    static StageConfig defaults(Stage stage);
    // Config errors for non-positive steps, rate, batch or sigma.
    void validate() const;
};

struct LogRow {
    int step = 0;
    Stage stage = Stage::Source;
    double learning_rate = 0.0;
    std::map<std::string, double> losses;  // batch means per component
    double total = 0.0;
};

struct TrainingReport {
    std::vector<LogRow> log;
    std::map<std::string, double> initial;  // full-dataset losses before training
    std::map<std::string, double> final;    // and after
    AdamState<float> optimizer;

    static double sum(const std::map<std::string, double>& losses);
};

// "step,stage,learning_rate,<components...>,total" with one row per step.
std::string training_log_csv(std::span<const LogRow> log);

// Per-speaker pitch z-scoring followed by conversion to model examples.
// Speakers the model does not know map to the mean embedding (-1).
std::vector<TrainingExample> prepare_examples(const AcousticModel<float>& model,
                                              std::span<const UtteranceRecord> records);
std::vector<TrainingExample> prepare_examples(const AcousticModel<float>& model, std::span<const FpRecord> records);

// Mean of each loss component over `examples` in evaluation mode.
std::map<std::string, double> evaluate_losses(AcousticModel<float>& model, std::span<const TrainingExample> examples,
                                              const LossSelection& selection);

// All parameters on mel L1 + single-predictor duration MSE + pitch MSE.
TrainingReport train_source(AcousticModel<float>& model, std::span<const UtteranceRecord> corpus,
                            const StageConfig& config);

// FP predictor only, weighted cross entropy with config.sigma.
TrainingReport adapt_fp(AcousticModel<float>& model, std::span<const FpRecord> spon_fp, const StageConfig& config);

// Fits speed buckets, copies the duration predictor into three experts,
// then trains the router (CE on bucket tags), each expert on its own bucket
// and the pitch predictor on all positions.
TrainingReport adapt_rhythm(AcousticModel<float>& model, std::span<const UtteranceRecord> spon_rhythm,
                            const StageConfig& config);

// Conditional-norm generators and the target speaker's embedding row on
// mel L1. An unknown target speaker gets a new row first.
TrainingReport adapt_speaker(AcousticModel<float>& model, std::span<const UtteranceRecord> spon_timbre,
                             const StageConfig& config);

// Durations of all real positions (BOS excluded), in corpus order.
std::vector<int> fitting_durations(std::span<const UtteranceRecord> records);

}  // namespace spontts
