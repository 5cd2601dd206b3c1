#include "kidc/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "kidc/errors.hpp"
#include "kidc/utf8.hpp"

namespace kidc::tokenizer {

namespace {

bool is_split_ws(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_split_ws(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_split_ws(text[i])) ++i;
        if (i > start) words.emplace_back(text.substr(start, i - start));
    }
    return words;
}

}  // namespace

Vocab Vocab::from_tokens(std::vector<std::string> tokens, std::string continuation_prefix) {
    if (tokens.size() < 4) {
        throw InvalidInput("vocab needs at least the four special tokens, got " +
                           std::to_string(tokens.size()));
    }
    for (int i = 0; i < 4; ++i) {
        if (tokens[static_cast<std::size_t>(i)] != kSpecialTokens[i]) {
            throw InvalidInput(std::string("vocab line ") + std::to_string(i + 1) + " must be " +
                               kSpecialTokens[i] + ", got '" + tokens[static_cast<std::size_t>(i)] +
                               "'");
        }
    }
    Vocab v;
    v.continuation_prefix_ = std::move(continuation_prefix);
    v.index_.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& t = tokens[i];
        if (t.empty()) throw InvalidInput("vocab line " + std::to_string(i + 1) + " is empty");
        for (char c : t) {
            if (is_split_ws(c)) {
                throw InvalidInput("vocab token at line " + std::to_string(i + 1) +
                                   " contains whitespace");
            }
        }
        if (!v.index_.emplace(t, static_cast<int>(i)).second) {
            throw InvalidInput("duplicate vocab token '" + t + "' at line " + std::to_string(i + 1));
        }
    }
    v.tokens_ = std::move(tokens);
    return v;
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open vocab file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    return from_tokens(std::move(tokens));
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write vocab file: " + path);
    for (const std::string& t : tokens_) out << t << '\n';
    if (!out) throw RunFailure("failed writing vocab file: " + path);
}

int Vocab::id_of(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? -1 : it->second;
}

// ---------------------------------------------------------------------------
// trainer
// ---------------------------------------------------------------------------

Vocab train_vocab(const std::vector<std::string>& corpus_lines, std::size_t target_size,
                  std::size_t min_freq) {
    if (min_freq == 0) min_freq = 1;
    // word frequencies in deterministic (sorted) order
    std::map<std::string, std::size_t> word_freq;
    for (const std::string& line : corpus_lines) {
        for (std::string& w : split_words(line)) word_freq[std::move(w)] += 1;
    }
    if (word_freq.empty()) throw InvalidInput("vocab training corpus is empty");

    std::map<std::string, std::size_t> char_freq;
    for (const auto& [word, freq] : word_freq) {
        for (char32_t cp : textnorm::decode_utf8(word)) {
            std::string c;
            textnorm::append_utf8(c, cp);
            char_freq[c] += freq;
        }
    }
    std::vector<std::string> alphabet;
    for (const auto& [c, freq] : char_freq) {
        if (freq >= min_freq) alphabet.push_back(c);
    }
    std::size_t floor_size = 4 + 2 * alphabet.size();
    if (target_size < floor_size) {
        throw InvalidInput("vocab target_size " + std::to_string(target_size) +
                           " cannot hold specials plus alphabet; minimum is " +
                           std::to_string(floor_size));
    }

    const std::string prefix = "##";
    std::vector<std::string> tokens(kSpecialTokens, kSpecialTokens + 4);
    for (const std::string& c : alphabet) tokens.push_back(c);
    for (const std::string& c : alphabet) tokens.push_back(prefix + c);

    std::unordered_set<std::string> in_vocab(tokens.begin(), tokens.end());
    std::unordered_set<std::string> covered(alphabet.begin(), alphabet.end());

    // words as symbol-string sequences; words with an uncovered character can
    // never be encoded beyond [UNK], so they sit out of the merge statistics
    std::vector<std::pair<std::vector<std::string>, std::size_t>> seqs;
    for (const auto& [word, freq] : word_freq) {
        std::vector<std::string> syms;
        bool ok = true;
        bool first = true;
        for (char32_t cp : textnorm::decode_utf8(word)) {
            std::string c;
            textnorm::append_utf8(c, cp);
            if (!covered.count(c)) {
                ok = false;
                break;
            }
            syms.push_back(first ? c : prefix + c);
            first = false;
        }
        if (ok && syms.size() >= 1) seqs.emplace_back(std::move(syms), freq);
    }

    auto strip_prefix = [&prefix](const std::string& s) {
        return s.rfind(prefix, 0) == 0 ? s.substr(prefix.size()) : s;
    };

    while (tokens.size() < target_size) {
        std::map<std::pair<std::string, std::string>, std::size_t> pair_freq;
        for (const auto& [syms, freq] : seqs) {
            for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
                pair_freq[{syms[i], syms[i + 1]}] += freq;
            }
        }
        // most frequent pair, ties broken lexicographically: std::map iterates
        // pairs in sorted order, so the first strict maximum wins
        const std::pair<std::string, std::string>* best = nullptr;
        std::size_t best_freq = 0;
        for (const auto& [pr, freq] : pair_freq) {
            if (freq > best_freq) {
                best_freq = freq;
                best = &pr;
            }
        }
        if (!best || best_freq < min_freq) break;

        std::string merged = best->first + strip_prefix(best->second);
        if (in_vocab.insert(merged).second) tokens.push_back(merged);
        for (auto& [syms, freq] : seqs) {
            for (std::size_t i = 0; i + 1 < syms.size();) {
                if (syms[i] == best->first && syms[i + 1] == best->second) {
                    syms[i] = merged;
                    syms.erase(syms.begin() + static_cast<std::ptrdiff_t>(i) + 1);
                } else {
                    ++i;
                }
            }
        }
    }
    return Vocab::from_tokens(std::move(tokens));
}

// ---------------------------------------------------------------------------
// encode / decode
// ---------------------------------------------------------------------------

namespace {

// Greedy longest-prefix segmentation. Returns false when no piece matches at
// some position, in which case the whole word becomes [UNK].
bool segment_word(const std::string& word, const Vocab& vocab, std::vector<int>& out) {
    std::vector<char32_t> cps = textnorm::decode_utf8(word);
    std::size_t pos = 0;
    std::size_t begin = out.size();
    while (pos < cps.size()) {
        int match = -1;
        std::size_t match_end = 0;
        for (std::size_t end = cps.size(); end > pos; --end) {
            std::string piece;
            if (pos > 0) piece = vocab.continuation_prefix();
            for (std::size_t k = pos; k < end; ++k) textnorm::append_utf8(piece, cps[k]);
            int id = vocab.id_of(piece);
            if (id >= 4) {  // segmentation never produces special tokens
                match = id;
                match_end = end;
                break;
            }
        }
        if (match < 0) {
            out.resize(begin);
            return false;
        }
        out.push_back(match);
        pos = match_end;
    }
    return true;
}

}  // namespace

TokenizedInput encode(std::string_view normalized_text, const Vocab& vocab, std::size_t max_len) {
    if (max_len < 3) {
        throw InvalidInput("encode: max_len must be at least 3, got " + std::to_string(max_len));
    }
    std::vector<int> pieces;
    for (const std::string& word : split_words(normalized_text)) {
        if (!segment_word(word, vocab, pieces)) pieces.push_back(kUnkId);
    }
    if (pieces.size() > max_len - 2) pieces.resize(max_len - 2);  // drop the tail, keep [SEP]

    TokenizedInput t;
    t.ids.assign(max_len, kPadId);
    t.mask.assign(max_len, 0);
    t.ids[0] = kClsId;
    std::size_t at = 1;
    for (int id : pieces) t.ids[at++] = id;
    t.ids[at++] = kSepId;
    t.real_len = at;
    for (std::size_t i = 0; i < t.real_len; ++i) t.mask[i] = 1;
    return t;
}

std::string decode(const std::vector<int>& ids, const Vocab& vocab) {
    std::string out;
    bool word_open = false;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        int id = ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
            throw InvalidInput("decode: id " + std::to_string(id) + " at position " +
                               std::to_string(i) + " out of range [0," +
                               std::to_string(vocab.size()) + ")");
        }
        if (id < 4) continue;  // specials dropped
        const std::string& tok = vocab.token(static_cast<std::size_t>(id));
        const std::string& prefix = vocab.continuation_prefix();
        if (tok.rfind(prefix, 0) == 0) {
            out += tok.substr(prefix.size());
        } else {
            if (word_open) out += ' ';
            out += tok;
        }
        word_open = true;
    }
    return out;
}

}  // namespace kidc::tokenizer
