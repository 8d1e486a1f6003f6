#include <CLI11.hpp>
#include <algorithm>
#include <iostream>

#include "spontts/cli/commands.hpp"
#include "spontts/error.hpp"

namespace {

using spontts::CommandContext;
namespace fs = std::filesystem;

// Options every subcommand takes.
struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    std::string out;
};

void add_common(CLI::App* app, Common& c, bool out_required = true) {
    app->add_option("-c,--config", c.config, "key=value settings file")->check(CLI::ExistingFile);
    app->add_option("-s,--set", c.overrides, "setting override key=value (repeatable)");
    app->add_option("--seed", c.seed, "random seed (overrides the seed setting)");
    auto* out = app->add_option("-o,--out", c.out, "output directory");
    if (out_required) out->required();
    app->add_flag_callback("--print-settings", [app] {
        const auto settings = spontts::command_settings(app->get_name());
        for (const auto& spec : settings.specs()) {
            std::cout << spec.key << " = " << spec.default_value << "    # " << spec.help << "\n";
        }
        throw CLI::Success();
    }, "list this command's settings with defaults and exit");
}

CommandContext context(const CLI::App* app, const Common& c) {
    CommandContext ctx;
    if (!c.config.empty()) ctx.config_file = c.config;
    ctx.overrides = c.overrides;
    if (app->count("--seed") > 0) ctx.seed = c.seed;
    ctx.out = c.out;
    ctx.console = &std::cout;
    return ctx;
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

void print_warnings(const spontts::CommandResult& r) {
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spontts: spontaneous-style acoustic model pipeline"};
    app.require_subcommand(1);

    Common mine_c;
    std::vector<std::string> transcripts;
    std::string mine_lexicon, mine_corpus;
    auto* mine = app.add_subcommand("mine", "build adaptation datasets from marked transcripts or a spontaneous corpus");
    add_common(mine, mine_c);
    auto* t_opt = mine->add_option("--transcripts", transcripts, "marked transcript files, one sentence per line")
                      ->check(CLI::ExistingFile);
    mine->add_option("--lexicon", mine_lexicon, "CMU-style pronunciation dictionary (bundled when absent)")
        ->check(CLI::ExistingFile);
    auto* c_opt = mine->add_option("--corpus", mine_corpus, "spontaneous corpus directory with mel features");
    t_opt->excludes(c_opt);

    Common sc_c;
    auto* synth_corpus = app.add_subcommand("synth-corpus", "generate a synthetic corpus and its duration report");
    add_common(synth_corpus, sc_c);

    Common train_c;
    std::string train_corpus;
    auto* train = app.add_subcommand("train", "source training on a reading-style corpus");
    add_common(train, train_c);
    train->add_option("--corpus", train_corpus, "corpus directory")->required();

    struct Adapt {
        Common c;
        std::string checkpoint, data;
        CLI::App* app = nullptr;
        spontts::Stage stage;
    };
    Adapt adapts[3] = {{{}, {}, {}, nullptr, spontts::Stage::Fp},
                       {{}, {}, {}, nullptr, spontts::Stage::Rhythm},
                       {{}, {}, {}, nullptr, spontts::Stage::Speaker}};
    const char* adapt_help[3] = {"adapt the FP predictor on SPON-FP",
                                 "fit speed buckets and adapt router, experts and pitch on SPON-RHYTHM",
                                 "adapt conditional norms and a speaker embedding on SPON-TIMBRE"};
    for (int i = 0; i < 3; ++i) {
        auto& a = adapts[i];
        a.app = app.add_subcommand("adapt-" + std::string(spontts::to_string(a.stage)), adapt_help[i]);
        add_common(a.app, a.c);
        a.app->add_option("--checkpoint", a.checkpoint, "input checkpoint directory")->required();
        a.app->add_option("--data", a.data, "adaptation dataset directory")->required();
    }

    Common synth_c;
    std::string synth_ckpt, synth_text, synth_phonemes, synth_lexicon;
    auto* synth = app.add_subcommand("synth", "synthesize a mel spectrogram");
    add_common(synth, synth_c);
    synth->add_option("--checkpoint", synth_ckpt, "checkpoint directory")->required();
    auto* text_opt = synth->add_option("--text", synth_text, "text (words looked up in the lexicon)");
    auto* ph_opt = synth->add_option("--phonemes", synth_phonemes, "space separated phoneme symbols");
    text_opt->excludes(ph_opt);
    synth->add_option("--lexicon", synth_lexicon, "pronunciation dictionary")->check(CLI::ExistingFile);

    Common eval_c;
    std::string eval_ckpt, eval_data;
    auto* eval = app.add_subcommand("eval-fp", "FP recall/precision/accuracy over a threshold grid");
    add_common(eval, eval_c);
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint directory")->required();
    eval->add_option("--data", eval_data, "held-out SPON-FP directory")->required();

    Common report_c;
    std::string report_corpus, report_log;
    auto* report = app.add_subcommand("report", "duration distribution of a corpus or summary of a training log");
    add_common(report, report_c, false);
    auto* rc_opt = report->add_option("--corpus", report_corpus, "corpus directory or records file");
    auto* rl_opt = report->add_option("--log", report_log, "training log CSV");
    rc_opt->excludes(rl_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error[usage]: " << e.what() << "\n";
        return 2;
    }

    try {
        spontts::CommandResult result;
        if (*mine) {
            spontts::MineInputs in;
            for (const auto& t : transcripts) in.transcripts.emplace_back(t);
            if (!mine_lexicon.empty()) in.lexicon = mine_lexicon;
            if (!mine_corpus.empty()) in.corpus = mine_corpus;
            result = spontts::cmd_mine(in, context(mine, mine_c));
        } else if (*synth_corpus) {
            result = spontts::cmd_synth_corpus(context(synth_corpus, sc_c));
        } else if (*train) {
            result = spontts::cmd_train(train_corpus, context(train, train_c));
        } else if (*synth) {
            spontts::SynthInput in;
            if (*text_opt) in.text = synth_text;
            if (*ph_opt) in.phonemes = synth_phonemes;
            if (!synth_lexicon.empty()) in.lexicon = synth_lexicon;
            result = spontts::cmd_synth(synth_ckpt, in, context(synth, synth_c));
        } else if (*eval) {
            result = spontts::cmd_eval_fp(eval_ckpt, eval_data, context(eval, eval_c));
        } else if (*report) {
            std::optional<fs::path> corpus, log;
            if (*rc_opt) corpus = report_corpus;
            if (*rl_opt) log = report_log;
            result = spontts::cmd_report(corpus, log, context(report, report_c));
        } else {
            for (auto& a : adapts) {
                if (*a.app) result = spontts::cmd_adapt(a.stage, a.checkpoint, a.data, context(a.app, a.c));
            }
        }
        print_warnings(result);
    } catch (const spontts::Error& e) {
        std::cerr << "error[" << spontts::to_string(e.kind()) << "]: " << one_line(e.what()) << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error[io]: " << one_line(e.what()) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << one_line(e.what()) << "\n";
        return 1;
    }
    return 0;
}
