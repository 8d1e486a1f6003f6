#include "spontts/corpus/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "spontts/corpus/phonemes.hpp"
#include "spontts/error.hpp"

namespace spontts {

namespace {

// Minimal built-in dictionary, enough for demos and tests.
constexpr std::string_view kBundledLexicon = R"(
a ax
about ax b aw t
actually ae k ch uw ax l iy
all ao l
always ao l w ey z
an ae n
and ae n d
apple ae p ax l
are aa r
as ae z
at ae t
be b iy
because b ih k ao z
big b ih g
but b ah t
by b ay
called k ao l d
can k ae n
card k aa r d
come k ah m
computer k ax m p y uw t er
computers k ax m p y uw t er z
could k uh d
data d ey t ax
do d uw
episode eh p ax s ow d
everyone eh v r iy w ah n
fast f ae s t
first f er s t
for f ao r
from f r ah m
game g ey m
games g ey m z
get g eh t
go g ow
going g ow ih ng
good g uh d
got g aa t
guys g ay z
hardware hh aa r d w eh r
have hh ae v
he hh iy
hello hh ax l ow
here hh ih r
how hh aw
i ay
if ih f
in ih n
is ih z
it ih t
it's ih t s
just jh ah s t
keyboard k iy b ao r d
kind k ay n d
know n ow
laptop l ae p t aa p
last l ae s t
like l ay k
little l ih t ax l
look l uh k
lot l aa t
make m ey k
maybe m ey b iy
me m iy
mean m iy n
memory m eh m er iy
more m ao r
mouse m aw s
much m ah ch
music m y uw z ih k
my m ay
never n eh v er
new n uw
news n uw z
next n eh k s t
no n ow
not n aa t
now n aw
of ah v
okay ow k ey
on aa n
one w ah n
or ao r
other ah dh er
our aw er
out aw t
people p iy p ax l
phone f ow n
podcast p aa d k ae s t
pretty p r ih t iy
price p r ay s
probably p r aa b ax b l iy
really r ih l iy
review r iy v y uw
right r ay t
said s eh d
say s ey
screen s k r iy n
see s iy
she sh iy
should sh uh d
show sh ow
slow s l ow
so s ow
software s ao f t w eh r
some s ah m
something s ah m th ih ng
sort s ao r t
sound s aw n d
speech s p iy ch
speed s p iy d
still s t ih l
talk t ao k
thank th ae ng k
thanks th ae ng k s
that dh ae t
the dh ax
them dh eh m
then dh eh n
there dh eh r
they dh ey
thing th ih ng
things th ih ng z
think th ih ng k
this dh ih s
time t ay m
to t uw
today t ax d ey
two t uw
up ah p
use y uw z
very v eh r iy
video v ih d iy ow
voice v oy s
want w aa n t
was w ah z
way w ey
we w iy
week w iy k
well w eh l
what w ah t
when w eh n
which w ih ch
why w ay
windows w ih n d ow z
with w ih dh
work w er k
works w er k s
world w er l d
would w uh d
year y ih r
years y ih r z
yeah y ae
yes y eh s
you y uw
your y ao r
)";

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) {
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    return out;
}

std::string normalise_phoneme(std::string_view raw) {
    std::string p = lower(raw);
    if (p == "ah0") {
        return "ax";
    }
    while (!p.empty() && std::isdigit(static_cast<unsigned char>(p.back()))) {
        p.pop_back();
    }
    return p;
}

}  // namespace

Lexicon Lexicon::bundled() {
    static const Lexicon lexicon = parse(kBundledLexicon, "<bundled>");
    return lexicon;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Io, "cannot open lexicon " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.string());
}

Lexicon Lexicon::parse(std::string_view text, std::string_view origin) {
    Lexicon lex;
    const auto& inventory = PhonemeInventory::standard();
    std::istringstream lines{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(lines, line)) {
        ++number;
        if (line.empty() || line.starts_with(";;;") || line.starts_with('#')) {
            continue;
        }
        std::istringstream fields(line);
        std::string word;
        if (!(fields >> word)) {
            continue;
        }
        if (word.ends_with(')') && word.find('(') != std::string::npos) {
            continue;
        }
        std::vector<std::string> phonemes;
        std::string ph;
        while (fields >> ph) {
            std::string p = normalise_phoneme(ph);
            require(inventory.contains(p) && p != kBosSymbol, ErrorKind::Parse,
                    std::string(origin) + ":" + std::to_string(number) + ": unknown phoneme '" + ph + "'");
            phonemes.push_back(std::move(p));
        }
        require(!phonemes.empty(), ErrorKind::Parse,
                std::string(origin) + ":" + std::to_string(number) + ": entry without phonemes");
        std::string key = lower(word);
        if (!lex.contains(key)) {
            lex.add(std::move(key), std::move(phonemes));
        }
    }
    return lex;
}

void Lexicon::add(std::string word, std::vector<std::string> phonemes) {
    entries_.insert_or_assign(std::move(word), std::move(phonemes));
}

const std::vector<std::string>& Lexicon::lookup(std::string_view word) const {
    require(!word.empty(), ErrorKind::Oov, "empty word has no pronunciation");
    auto it = entries_.find(word);
    require(it != entries_.end(), ErrorKind::Oov, "out-of-vocabulary word: " + std::string(word));
    return it->second;
}

std::vector<std::string> g2p_lookup(std::string_view word, const Lexicon& lexicon) {
    return lexicon.lookup(word);
}

std::vector<std::string> g2p_lookup(const TranscriptToken& token, const Lexicon& lexicon) {
    if (token.is_fp()) {
        return fp_spelling(token.fp);
    }
    return lexicon.lookup(token.word);
}

std::vector<std::string> transcribe(std::span<const TranscriptToken> tokens, const Lexicon& lexicon) {
    std::vector<std::string> out;
    std::vector<std::string> missing;
    for (const auto& token : tokens) {
        if (token.is_fp()) {
            out.emplace_back(fp_symbol(token.fp));
            continue;
        }
        if (!lexicon.contains(token.word)) {
            if (std::find(missing.begin(), missing.end(), token.word) == missing.end()) {
                missing.push_back(token.word);
            }
            continue;
        }
        const auto& ph = lexicon.lookup(token.word);
        out.insert(out.end(), ph.begin(), ph.end());
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& w : missing) {
            list += (list.empty() ? "" : ", ") + w;
        }
        fail(ErrorKind::Oov, "out-of-vocabulary words: " + list);
    }
    return out;
}

}  // namespace spontts
