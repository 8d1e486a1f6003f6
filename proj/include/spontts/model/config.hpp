#pragma once

#include <string>
#include <string_view>

#include "spontts/corpus/phonemes.hpp"
#include "spontts/corpus/record.hpp"
#include "spontts/error.hpp"

namespace spontts {

struct ModelConfig {
    int hidden = 32;
    int encoder_blocks = 2;
    int decoder_blocks = 2;
    int heads = 2;
    int ffn_filter = 64;
    int conv_kernel = 3;
    int mel_dim = kMelDim;
    int phoneme_vocab = 0;  // 0 selects the full standard inventory
    int predictor_channels = 32;
    int predictor_kernel = 3;
    double dropout = 0.1;

    static ModelConfig desk() { return {}; }

    static ModelConfig paper() {
        ModelConfig c;
        c.hidden = 256;
        c.encoder_blocks = 4;
        c.decoder_blocks = 4;
        c.ffn_filter = 1024;
        c.conv_kernel = 9;
        c.predictor_channels = 256;
        return c;
    }

    static ModelConfig profile(std::string_view name) {
        if (name == "desk") return desk();
        if (name == "paper") return paper();
        fail(ErrorKind::Config, "unknown model profile '" + std::string(name) + "' (expected desk or paper)");
    }

    int vocab() const { return phoneme_vocab > 0 ? phoneme_vocab : PhonemeInventory::standard().size(); }

    void validate() const {
        require(hidden >= 1 && heads >= 1 && hidden >= heads && hidden % heads == 0, ErrorKind::Config,
                "hidden size must be a positive multiple of the attention heads");
        require(encoder_blocks >= 1 && decoder_blocks >= 1, ErrorKind::Config, "need at least one block each side");
        require(ffn_filter >= 1 && predictor_channels >= 1, ErrorKind::Config, "layer widths must be positive");
        require(conv_kernel % 2 == 1 && predictor_kernel % 2 == 1, ErrorKind::Config, "kernel widths must be odd");
        require(mel_dim == kMelDim, ErrorKind::Config, "mel_dim must be 80");
        require(vocab() >= 2 && vocab() <= PhonemeInventory::standard().size(), ErrorKind::Config,
                "phoneme vocabulary must fit the standard inventory");
        require(dropout >= 0.0 && dropout < 1.0, ErrorKind::Config, "dropout must lie in [0, 1)");
    }
};

}  // namespace spontts
