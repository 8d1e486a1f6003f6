#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "spontts/adaptation/training.hpp"
#include "spontts/cli/settings.hpp"

namespace spontts {

inline constexpr const char* kResolvedConfigFile = "resolved_config.txt";
inline constexpr const char* kTrainingLogFile = "training_log.csv";
inline constexpr const char* kFpEvalFile = "fp_eval.csv";
inline constexpr const char* kSynthMelFile = "mel.f32";
inline constexpr const char* kSynthMetadataFile = "metadata.json";

// Shared invocation state. Settings resolve as declared defaults, then the
// config file, then each override, then `seed`.
struct CommandContext {
    std::optional<std::filesystem::path> config_file;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out;
    std::ostream* console = nullptr;  // progress lines; null is silent
};

struct CommandResult {
    std::vector<std::string> warnings;
};

// Declared keys of a subcommand ("mine", "train", "adapt-fp", ...).
Settings command_settings(std::string_view command);
Settings resolve_settings(std::string_view command, const CommandContext& ctx);

// Either transcripts (SPON-FP only) or a spontaneous corpus with audio
// features (all three adaptation datasets).
struct MineInputs {
    std::vector<std::filesystem::path> transcripts;
    std::optional<std::filesystem::path> lexicon;  // bundled when absent
    std::optional<std::filesystem::path> corpus;
};
CommandResult cmd_mine(const MineInputs& inputs, const CommandContext& ctx);

CommandResult cmd_synth_corpus(const CommandContext& ctx);

// Source training from scratch into the checkpoint directory ctx.out.
CommandResult cmd_train(const std::filesystem::path& corpus, const CommandContext& ctx);

// Adaptation stages read a checkpoint, check stage order before writing
// anything, and write the adapted checkpoint to ctx.out.
CommandResult cmd_adapt(Stage stage, const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                        const CommandContext& ctx);

struct SynthInput {
    std::optional<std::string> text;      // marked text, looked up in the lexicon
    std::optional<std::string> phonemes;  // space separated symbols
    std::optional<std::filesystem::path> lexicon;
};
CommandResult cmd_synth(const std::filesystem::path& checkpoint, const SynthInput& input, const CommandContext& ctx);

CommandResult cmd_eval_fp(const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                          const CommandContext& ctx);

// Duration report for a corpus or final-step summary of a training log.
CommandResult cmd_report(const std::optional<std::filesystem::path>& corpus,
                         const std::optional<std::filesystem::path>& log, const CommandContext& ctx);

}  // namespace spontts
