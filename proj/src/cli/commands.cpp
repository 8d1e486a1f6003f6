#include "spontts/cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <json.hpp>
#include <set>
#include <sstream>

#include "spontts/adaptation/checkpoint.hpp"
#include "spontts/adaptation/metrics.hpp"
#include "spontts/corpus/datasets.hpp"
#include "spontts/corpus/io.hpp"
#include "spontts/corpus/lexicon.hpp"
#include "spontts/corpus/report.hpp"
#include "spontts/corpus/synthetic.hpp"
#include "spontts/corpus/transcript.hpp"
#include "spontts/error.hpp"

namespace spontts {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

void say(const CommandContext& ctx, const std::string& line) {
    if (ctx.console) *ctx.console << line << "\n";
}

std::vector<SettingSpec> stage_specs(Stage stage) {
    const auto d = StageConfig::defaults(stage);
    std::vector<SettingSpec> specs = {
        {"model.profile", "desk", "model size profile (desk or paper)"},
        {"train.steps", std::to_string(d.steps), "optimizer steps"},
        {"train.learning_rate", format_double(d.learning_rate), "peak Adam learning rate"},
        {"train.batch_size", std::to_string(d.batch_size), "utterances per step"},
        {"train.warmup_fraction", format_double(d.warmup_fraction), "share of steps with linear warmup"},
        {"train.prefixes", "", "comma separated trainable name prefixes; empty selects the stage default"},
    };
    if (stage == Stage::Fp) specs.push_back({"train.sigma", format_double(d.sigma), "weight on UH/UM labels"});
    if (stage == Stage::Speaker) {
        specs.push_back({"train.target_speaker", "", "speaker to adapt; empty selects the first record's"});
    }
    return specs;
}

StageConfig stage_config(const Settings& s, Stage stage) {
    auto c = StageConfig::defaults(stage);
    c.steps = s.get_int("train.steps");
    c.learning_rate = s.get_double("train.learning_rate");
    c.batch_size = s.get_int("train.batch_size");
    c.warmup_fraction = s.get_double("train.warmup_fraction");
    c.trainable_prefixes = s.get_list("train.prefixes");
    c.seed = s.get_u64("seed");
    if (stage == Stage::Fp) c.sigma = s.get_double("train.sigma");
    if (stage == Stage::Speaker) c.target_speaker = s.get("train.target_speaker");
    c.validate();
    return c;
}

std::string threshold_grid_text() {
    std::string out;
    for (double t : default_threshold_grid()) out += (out.empty() ? "" : ",") + format_double(t);
    return out;
}

void prepare_out(const CommandContext& ctx, const Settings& s) {
    require(!ctx.out.empty(), ErrorKind::Config, "an output directory is required");
    fs::create_directories(ctx.out);
    write_text_file(ctx.out / kResolvedConfigFile, s.resolved_text());
}

bool has_stage(const Checkpoint& ck, Stage stage) {
    return std::find(ck.stage_history.begin(), ck.stage_history.end(), to_string(stage)) != ck.stage_history.end();
}

Checkpoint open_checkpoint(const fs::path& path, const Settings& s, CommandResult& result) {
    auto ck = load_checkpoint(path, model_config_hash(ModelConfig::profile(s.get("model.profile"))));
    result.warnings.insert(result.warnings.end(), ck.warnings.begin(), ck.warnings.end());
    return ck;
}

void report_losses(const CommandContext& ctx, const TrainingReport& report) {
    for (const auto& [name, before] : report.initial) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "  %-14s %.6f -> %.6f", name.c_str(), before, report.final.at(name));
        say(ctx, buf);
    }
}

void finish_stage(Checkpoint& ck, Stage stage, const TrainingReport& report, std::uint64_t seed,
                  const CommandContext& ctx) {
    ck.stage_history.emplace_back(to_string(stage));
    ck.optimizer = report.optimizer;
    ck.seed = seed;
    save_checkpoint(ctx.out, ck);
    write_text_file(ctx.out / kTrainingLogFile, training_log_csv(report.log));
    say(ctx, std::string(to_string(stage)) + ": " + std::to_string(report.log.size()) + " steps, checkpoint " +
                 ctx.out.string());
    report_losses(ctx, report);
}

Lexicon lexicon_from(const std::optional<fs::path>& path) { return path ? Lexicon::load(*path) : Lexicon::bundled(); }

std::vector<std::string> split_ws(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string cell; std::getline(in, cell, ',');) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

Settings command_settings(std::string_view command) {
    std::vector<SettingSpec> specs = {{"seed", "1", "random seed"}};
    auto add = [&](std::vector<SettingSpec> more) { specs.insert(specs.end(), more.begin(), more.end()); };
    if (command == "mine") {
        add({{"mine.speaker", "unknown", "speaker recorded for transcript lines"},
             {"mine.id_prefix", "line", "record id prefix for transcript lines"},
             {"datasets.timbre_size", "50", "SPON-TIMBRE utterances"},
             {"datasets.timbre_speaker", "", "SPON-TIMBRE speaker; empty selects the speaker with most records"}});
    } else if (command == "synth-corpus") {
        const SyntheticConfig d;
        add({{"corpus.style", "reading", "reading or spontaneous"},
             {"corpus.utterances", std::to_string(d.utterances), "utterance count"},
             {"corpus.speakers", std::to_string(d.speaker_count), "speaker count (spk00, spk01, ...)"},
             {"corpus.speaker_names", "", "comma separated names; overrides corpus.speakers"},
             {"corpus.alphabet_size", std::to_string(d.alphabet_size), "phoneme symbols in use"},
             {"corpus.min_length", std::to_string(d.min_length), "shortest utterance in phonemes"},
             {"corpus.max_length", std::to_string(d.max_length), "longest utterance in phonemes"},
             {"corpus.fp_rate", format_double(d.fp_rate), "FP tokens per phoneme; negative selects the style default"},
             {"corpus.um_fraction", format_double(d.um_fraction), "share of FPs that are um"},
             {"corpus.designated_period", std::to_string(d.designated_period), "designated class period"},
             {"corpus.designated_strength", format_double(d.designated_strength),
              "share of FPs after a designated phoneme"},
             {"corpus.world_seed", std::to_string(d.world_seed), "seed of the shared phoneme and speaker world"},
             {"corpus.id_prefix", d.id_prefix, "record id prefix"}});
    } else if (command == "train") {
        add(stage_specs(Stage::Source));
    } else if (command == "adapt-fp") {
        add(stage_specs(Stage::Fp));
    } else if (command == "adapt-rhythm") {
        add(stage_specs(Stage::Rhythm));
    } else if (command == "adapt-speaker") {
        add(stage_specs(Stage::Speaker));
    } else if (command == "synth") {
        add({{"model.profile", "desk", "model size profile (desk or paper)"},
             {"synth.fp_threshold", "0.5", "insert an FP where s0 <= threshold"},
             {"synth.fp_enabled", "true", "run the FP predictor"},
             {"synth.speaker", "", "speaker name; empty selects the mean speaker embedding"}});
    } else if (command == "eval-fp") {
        add({{"model.profile", "desk", "model size profile (desk or paper)"},
             {"eval.thresholds", threshold_grid_text(), "comma separated ascending thresholds"}});
    } else if (command != "report") {
        fail(ErrorKind::Config, "unknown command '" + std::string(command) + "'");
    }
    return Settings(std::move(specs));
}

Settings resolve_settings(std::string_view command, const CommandContext& ctx) {
    Settings s = command_settings(command);
    if (ctx.config_file) s.load_file(*ctx.config_file);
    for (const auto& o : ctx.overrides) s.assign(o);
    if (ctx.seed) s.set("seed", std::to_string(*ctx.seed), "--seed");
    return s;
}

CommandResult cmd_mine(const MineInputs& in, const CommandContext& ctx) {
    const Settings s = resolve_settings("mine", ctx);
    require(in.transcripts.empty() != !in.corpus.has_value(), ErrorKind::Config,
            "mine needs either transcripts or a spontaneous corpus, not both");
    CommandResult result;
    if (in.corpus) {
        const auto records = read_records(*in.corpus, true);
        DatasetConfig dc;
        dc.timbre_size = static_cast<std::size_t>(s.get_int("datasets.timbre_size"));
        if (!s.get("datasets.timbre_speaker").empty()) dc.timbre_speaker = s.get("datasets.timbre_speaker");
        const auto datasets = build_adaptation_datasets(records, dc);
        prepare_out(ctx, s);
        const auto m = write_adaptation_datasets(ctx.out, datasets);
        for (const auto* w : {&datasets.fp_warnings, &datasets.rhythm_warnings, &datasets.timbre_warnings}) {
            result.warnings.insert(result.warnings.end(), w->begin(), w->end());
        }
        say(ctx, "spon_fp: " + std::to_string(m.spon_fp.records) + " sentences, uh " + std::to_string(m.spon_fp.uh) +
                     ", um " + std::to_string(m.spon_fp.um));
        say(ctx, "spon_rhythm: " + std::to_string(m.spon_rhythm.records) + " utterances");
        say(ctx, "spon_timbre: " + std::to_string(m.spon_timbre.records) + " utterances");
        return result;
    }
    const Lexicon lexicon = lexicon_from(in.lexicon);
    std::vector<std::string> lines;
    for (const auto& path : in.transcripts) {
        require(fs::exists(path), ErrorKind::Io, "transcript file " + path.string() + " not found");
        std::istringstream text(read_text_file(path));
        for (std::string line; std::getline(text, line);) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
        }
    }
    const auto mined = mine_transcripts(lines, lexicon, s.get("mine.speaker"), s.get("mine.id_prefix"));
    prepare_out(ctx, s);
    const auto m = write_fp_records(ctx.out / "spon_fp", "spon_fp", mined.spon_fp, mined.warnings);
    result.warnings = mined.warnings;
    say(ctx, "spon_fp: " + std::to_string(m.records) + " sentences from " + std::to_string(mined.lines) +
                 " lines, uh " + std::to_string(m.uh) + ", um " + std::to_string(m.um));
    return result;
}

CommandResult cmd_synth_corpus(const CommandContext& ctx) {
    const Settings s = resolve_settings("synth-corpus", ctx);
    SyntheticConfig c;
    c.style = parse_style(s.get("corpus.style"));
    c.utterances = s.get_int("corpus.utterances");
    c.speaker_count = s.get_int("corpus.speakers");
    c.speakers = s.get_list("corpus.speaker_names");
    c.alphabet_size = s.get_int("corpus.alphabet_size");
    c.min_length = s.get_int("corpus.min_length");
    c.max_length = s.get_int("corpus.max_length");
    c.fp_rate = s.get_double("corpus.fp_rate");
    c.um_fraction = s.get_double("corpus.um_fraction");
    c.designated_period = s.get_int("corpus.designated_period");
    c.designated_strength = s.get_double("corpus.designated_strength");
    c.world_seed = s.get_u64("corpus.world_seed");
    c.id_prefix = s.get("corpus.id_prefix");
    const auto records = generate_synthetic_corpus(c, s.get_u64("seed"));
    const auto report = duration_distribution_report(records);
    prepare_out(ctx, s);
    const auto m = write_records(ctx.out, "synthetic_" + std::string(to_string(c.style)), records);
    write_text_file(ctx.out / "duration_histogram.csv", histogram_csv(report));
    write_text_file(ctx.out / "duration_summary.csv", summary_csv(report));
    say(ctx, std::to_string(m.records) + " utterances, " + std::to_string(m.phonemes) + " phonemes, uh " +
                 std::to_string(m.uh) + ", um " + std::to_string(m.um));
    say(ctx, summary_csv(report));
    return {};
}

CommandResult cmd_train(const fs::path& corpus, const CommandContext& ctx) {
    const Settings s = resolve_settings("train", ctx);
    const auto records = read_records(corpus, true);
    std::set<std::string> names;
    for (const auto& r : records) names.insert(r.speaker);
    const ModelConfig config = ModelConfig::profile(s.get("model.profile"));
    const std::uint64_t seed = s.get_u64("seed");
    const auto stage = stage_config(s, Stage::Source);
    AcousticModel<float> model(config, {names.begin(), names.end()}, seed);
    prepare_out(ctx, s);
    const auto report = train_source(model, records, stage);
    Checkpoint ck{std::move(model), {}, {}, model_config_hash(config), seed, {}};
    finish_stage(ck, Stage::Source, report, seed, ctx);
    return {};
}

CommandResult cmd_adapt(Stage stage, const fs::path& checkpoint, const fs::path& data, const CommandContext& ctx) {
    require(stage != Stage::Source, ErrorKind::Config, "source training is the train command");
    const std::string command = "adapt-" + std::string(to_string(stage));
    const Settings s = resolve_settings(command, ctx);
    CommandResult result;
    Checkpoint ck = open_checkpoint(checkpoint, s, result);
    check_stage_order(stage, ck.stage_history);
    const auto cfg = stage_config(s, stage);
    const std::uint64_t seed = s.get_u64("seed");
    TrainingReport report;
    if (stage == Stage::Fp) {
        const auto records = read_fp_records(data);
        prepare_out(ctx, s);
        report = adapt_fp(ck.model, records, cfg);
    } else {
        const auto records = read_records(data, stage == Stage::Speaker);
        prepare_out(ctx, s);
        report = stage == Stage::Rhythm ? adapt_rhythm(ck.model, records, cfg) : adapt_speaker(ck.model, records, cfg);
    }
    finish_stage(ck, stage, report, seed, ctx);
    return result;
}

CommandResult cmd_synth(const fs::path& checkpoint, const SynthInput& input, const CommandContext& ctx) {
    const Settings s = resolve_settings("synth", ctx);
    require(input.text.has_value() != input.phonemes.has_value(), ErrorKind::Config,
            "synth needs exactly one of text or phonemes");
    CommandResult result;
    Checkpoint ck = open_checkpoint(checkpoint, s, result);
    require(has_stage(ck, Stage::Source), ErrorKind::Order, "synth requires stage 'source' in the checkpoint history");

    std::vector<std::string> symbols;
    if (input.text) {
        const auto tokens = parse_marked_text(*input.text);
        symbols = transcribe(tokens, lexicon_from(input.lexicon));
    } else {
        symbols = split_ws(*input.phonemes);
    }
    const auto explicit_fp = std::count_if(symbols.begin(), symbols.end(), [](const auto& x) { return is_fp_symbol(x); });
    if (explicit_fp > 0) {
        std::erase_if(symbols, [](const std::string& x) { return is_fp_symbol(x); });
        result.warnings.push_back(std::to_string(explicit_fp) +
                                  " filled pause(s) in the input were removed; the FP predictor places them");
    }
    const auto ids = phoneme_ids_with_bos(symbols);

    SynthesisConfig sc;
    sc.fp_threshold = s.get_double("synth.fp_threshold");
    sc.fp_enabled = s.get_bool("synth.fp_enabled");
    sc.speaker = s.get("synth.speaker");
    auto out = ck.model.synthesize(ids, sc);
    result.warnings.insert(result.warnings.end(), out.warnings.begin(), out.warnings.end());

    prepare_out(ctx, s);
    write_mel(ctx.out / kSynthMelFile, out.mel);
    json meta;
    meta["checkpoint"] = checkpoint_digest(checkpoint);
    meta["stage_history"] = ck.stage_history;
    meta["phonemes"] = json::array();
    for (int id : out.phoneme_ids) meta["phonemes"].push_back(PhonemeInventory::standard().symbol(id));
    meta["fp_tags"] = json::array();
    for (auto t : out.fp_tags) meta["fp_tags"].push_back(static_cast<int>(t));
    meta["extended_phonemes"] = out.extended_symbols;
    meta["durations"] = out.durations;
    meta["pitch"] = out.pitch;
    meta["frames"] = out.mel.rows();
    meta["mel_dim"] = out.mel.cols();
    meta["fp_threshold"] = sc.fp_threshold;
    meta["fp_enabled"] = sc.fp_enabled;
    meta["speaker"] = sc.speaker;
    meta["warnings"] = result.warnings;
    json config = json::object();
    for (const auto& spec : s.specs()) config[spec.key] = s.get(spec.key);
    meta["config"] = config;
    write_text_file(ctx.out / kSynthMetadataFile, meta.dump(2) + "\n");
    say(ctx, std::to_string(out.extended_symbols.size()) + " positions (" +
                 std::to_string(out.extended_symbols.size() - out.phoneme_ids.size()) + " FP), " +
                 std::to_string(out.mel.rows()) + " frames");
    return result;
}

CommandResult cmd_eval_fp(const fs::path& checkpoint, const fs::path& data, const CommandContext& ctx) {
    const Settings s = resolve_settings("eval-fp", ctx);
    CommandResult result;
    Checkpoint ck = open_checkpoint(checkpoint, s, result);
    require(has_stage(ck, Stage::Source), ErrorKind::Order, "eval-fp requires stage 'source' in the checkpoint history");
    if (!ck.model.fp_adapted) result.warnings.emplace_back("FP predictor has not been adapted");
    const auto thresholds = s.get_doubles("eval.thresholds");
    require(std::is_sorted(thresholds.begin(), thresholds.end()), ErrorKind::Config, "thresholds must be ascending");
    const auto records = read_fp_records(data);
    require(!records.empty(), ErrorKind::Data, "FP evaluation needs a non-empty test set");
    const auto examples = prepare_examples(ck.model, records);
    const auto rows = fp_threshold_sweep(ck.model, examples, thresholds);
    prepare_out(ctx, s);
    const auto csv = fp_sweep_csv(rows);
    write_text_file(ctx.out / kFpEvalFile, csv);
    say(ctx, csv);
    return result;
}

CommandResult cmd_report(const std::optional<fs::path>& corpus, const std::optional<fs::path>& log,
                         const CommandContext& ctx) {
    const Settings s = resolve_settings("report", ctx);
    require(corpus.has_value() != log.has_value(), ErrorKind::Config, "report needs exactly one of corpus or log");
    if (corpus) {
        const auto records = read_records(*corpus, false);
        const auto report = duration_distribution_report(records);
        if (!ctx.out.empty()) {
            prepare_out(ctx, s);
            write_text_file(ctx.out / "duration_histogram.csv", histogram_csv(report));
            write_text_file(ctx.out / "duration_summary.csv", summary_csv(report));
        }
        say(ctx, summary_csv(report));
        return {};
    }
    require(fs::exists(*log), ErrorKind::Io, "training log " + log->string() + " not found");
    std::istringstream in(read_text_file(*log));
    std::string header, line, first, last;
    std::getline(in, header);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first.empty()) first = line;
        last = line;
    }
    require(!last.empty(), ErrorKind::Data, "training log " + log->string() + " has no rows");
    const auto names = split_csv_line(header);
    const auto a = split_csv_line(first), b = split_csv_line(last);
    require(names.size() == a.size() && names.size() == b.size() && names.size() >= 3, ErrorKind::Parse,
            "training log " + log->string() + " has ragged rows");
    std::string summary = "component,first,final\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "learning_rate" || names[i] == "stage") continue;
        summary += names[i] + "," + a[i] + "," + b[i] + "\n";
    }
    if (!ctx.out.empty()) {
        prepare_out(ctx, s);
        write_text_file(ctx.out / "training_summary.csv", summary);
    }
    say(ctx, summary);
    return {};
}

}  // namespace spontts
