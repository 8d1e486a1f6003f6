#pragma once

#include <span>
#include <string>
#include <vector>

#include "spontts/corpus/fp_pair.hpp"
#include "spontts/model/model.hpp"

namespace spontts {

// Recall and precision are 0 when their denominators are empty.
struct DetectionMetrics {
    double recall = 0.0;
    double precision = 0.0;
    double accuracy = 0.0;
};

// token: per position, 3-class; a true positive is a non-NONE prediction of
// the gold class. presence: per position, FP vs no FP. sentence: per
// utterance, any FP vs none.
struct FpMetrics {
    DetectionMetrics token;
    DetectionMetrics presence;
    DetectionMetrics sentence;
    std::size_t fp_count = 0;  // predicted non-NONE positions
    std::size_t positions = 0;
    std::size_t sentences = 0;
};

FpMetrics fp_metrics(std::span<const std::vector<FpTag>> gold, std::span<const std::vector<FpTag>> predicted);

struct FpSweepRow {
    double threshold = 0.0;
    FpMetrics metrics;
};

// {0.10, 0.20, ..., 0.90, 0.95, 0.99}
std::vector<double> default_threshold_grid();

// FP probabilities per example in evaluation mode, [n x 3] each.
std::vector<Tensor<float>> fp_probabilities(AcousticModel<float>& model, std::span<const TrainingExample> examples);

std::vector<FpSweepRow> fp_threshold_sweep(AcousticModel<float>& model, std::span<const TrainingExample> examples,
                                           std::span<const double> thresholds);

std::string fp_sweep_csv(std::span<const FpSweepRow> rows);

// Mean per-utterance teacher-forced mel L1 (examples without mel skipped).
double teacher_forced_mel_l1(AcousticModel<float>& model, std::span<const TrainingExample> examples);

// Share of FP-extended positions (BOS excluded) whose router argmax equals
// the gold speed bucket. Needs fitted speed boundaries.
double router_accuracy(AcousticModel<float>& model, std::span<const TrainingExample> examples);

// Mean squared error of log(1 + d) over FP-extended positions, BOS excluded,
// using the single predictor or the expert mixture.
double log_duration_mse(AcousticModel<float>& model, std::span<const TrainingExample> examples, DurationMode mode);

}  // namespace spontts
