#include "kidc/textnorm.hpp"

#include <fstream>
#include <sstream>

#include "kidc/errors.hpp"
#include "kidc/utf8.hpp"

namespace kidc::textnorm {

namespace {

constexpr char32_t kZwnj = 0x200C;
constexpr char32_t kTatweel = 0x0640;
constexpr char32_t kTehMarbuta = 0x0629;
constexpr char32_t kAe = 0x06D5;

bool is_harakat(char32_t cp) {
    return (cp >= 0x064B && cp <= 0x065F) || cp == 0x0670;
}

bool is_control_or_zero_width(char32_t cp) {
    if (cp == kZwnj) return false;  // orthographic in Sorani
    if (cp < 0x20 && !is_whitespace(cp)) return true;
    if (cp == 0x7F || (cp >= 0x80 && cp <= 0x9F && !is_whitespace(cp))) return true;
    switch (cp) {
        case 0x00AD:  // soft hyphen
        case 0x200B:  // zero width space
        case 0x200D:  // zero width joiner
        case 0x200E:  // LRM
        case 0x200F:  // RLM
        case 0x061C:  // arabic letter mark
        case 0xFEFF:  // BOM
            return true;
        default:
            return false;
    }
}

bool is_arabic_block(char32_t cp) {
    return (cp >= 0x0600 && cp <= 0x06FF) || (cp >= 0x0750 && cp <= 0x077F) ||
           (cp >= 0x08A0 && cp <= 0x08FF) || (cp >= 0xFB50 && cp <= 0xFDFF) ||
           (cp >= 0xFE70 && cp <= 0xFEFF);
}

char32_t casefold_latin_cp(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
    // Latin-1 supplement capitals, skipping the multiplication sign
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;
    return cp;
}

char32_t parse_codepoint(const std::string& token, const std::string& origin, std::size_t line) {
    if (token.size() < 3 || (token[0] != 'U' && token[0] != 'u') || token[1] != '+') {
        throw InvalidInput(origin + ":" + std::to_string(line) +
                           ": expected U+XXXX notation, got '" + token + "'");
    }
    char32_t cp = 0;
    for (std::size_t i = 2; i < token.size(); ++i) {
        char c = token[i];
        int digit = 0;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        else
            throw InvalidInput(origin + ":" + std::to_string(line) + ": bad hex digit in '" +
                               token + "'");
        cp = cp * 16 + static_cast<char32_t>(digit);
    }
    if (cp > 0x10FFFF) {
        throw InvalidInput(origin + ":" + std::to_string(line) + ": codepoint out of range");
    }
    return cp;
}

}  // namespace

bool is_whitespace(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0:
        case 0x1680: case 0x2028: case 0x2029: case 0x202F:
        case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

void UnificationTable::insert(char32_t src, char32_t dst, const std::string& origin,
                              std::size_t line) {
    if (is_whitespace(dst)) {
        throw InvalidInput(origin + ":" + std::to_string(line) +
                           ": mapping target must not be whitespace");
    }
    if (src == dst) {
        throw InvalidInput(origin + ":" + std::to_string(line) + ": mapping a character to itself");
    }
    auto [it, inserted] = map_.emplace(src, dst);
    if (!inserted && it->second != dst) {
        throw InvalidInput(origin + ":" + std::to_string(line) + ": conflicting mapping for source");
    }
}

void UnificationTable::validate(const std::string& origin) const {
    for (const auto& [src, dst] : map_) {
        if (map_.count(dst)) {
            throw InvalidInput(origin + ": mapping target U+" + std::to_string(dst) +
                               " is itself remapped; table must map onto fixed points");
        }
    }
}

UnificationTable UnificationTable::parse(std::string_view content, const std::string& origin) {
    UnificationTable t;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        std::size_t tab = line.find('\t', first);
        if (tab == std::string::npos) {
            throw InvalidInput(origin + ":" + std::to_string(lineno) +
                               ": expected SRC<TAB>DST, got '" + line + "'");
        }
        std::string src = line.substr(first, tab - first);
        std::string dst = line.substr(tab + 1);
        while (!dst.empty() && (dst.back() == ' ' || dst.back() == '\t')) dst.pop_back();
        t.insert(parse_codepoint(src, origin, lineno), parse_codepoint(dst, origin, lineno), origin,
                 lineno);
    }
    t.validate(origin);
    return t;
}

UnificationTable UnificationTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open unification table: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

const UnificationTable& UnificationTable::builtin() {
    static const UnificationTable table = [] {
        // mirrors data/sorani_unification.tsv; a unit test keeps them in sync
        UnificationTable t;
        auto add = [&t](char32_t s, char32_t d) { t.insert(s, d, "builtin", 0); };
        add(0x064A, 0x06CC);  // Arabic Yeh -> Farsi Yeh
        add(0x0649, 0x06CC);  // Alef Maksura -> Farsi Yeh
        add(0x0643, 0x06A9);  // Arabic Kaf -> Keheh
        add(0x06BE, 0x0647);  // Heh Doachashmee -> Heh
        for (char32_t i = 0; i < 10; ++i) {
            add(0x0660 + i, U'0' + i);  // Arabic-Indic digits
            add(0x06F0 + i, U'0' + i);  // Extended Arabic-Indic digits
        }
        t.validate("builtin");
        return t;
    }();
    return table;
}

char32_t UnificationTable::map(char32_t cp) const {
    auto it = map_.find(cp);
    return it == map_.end() ? 0 : it->second;
}

std::string normalize(std::string_view text, const NormalizationConfig& cfg,
                      const UnificationTable& table) {
    std::vector<char32_t> cps = decode_utf8(text);

    // pass 1: drop characters that never survive
    std::vector<char32_t> kept;
    kept.reserve(cps.size());
    for (char32_t cp : cps) {
        if (cfg.strip_controls && is_control_or_zero_width(cp)) continue;
        if (cfg.unify_chars && (cp == kTatweel || is_harakat(cp))) continue;
        kept.push_back(cp);
    }

    // pass 2: character unification and casing (word-final Teh Marbuta needs
    // the character that follows, hence the lookahead on the kept sequence)
    std::vector<char32_t> mapped;
    mapped.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        char32_t cp = kept[i];
        if (cfg.unify_chars) {
            if (char32_t dst = table.map(cp)) cp = dst;
            if (cp == kTehMarbuta) {
                bool word_final = i + 1 == kept.size() || is_whitespace(kept[i + 1]) ||
                                  !is_arabic_block(kept[i + 1]);
                if (word_final) cp = kAe;
            }
        }
        if (cfg.casefold_latin) cp = casefold_latin_cp(cp);
        mapped.push_back(cp);
    }

    // pass 3: whitespace
    std::string out;
    out.reserve(text.size());
    if (cfg.collapse_whitespace) {
        bool pending_space = false;
        bool seen_word = false;
        for (char32_t cp : mapped) {
            if (is_whitespace(cp)) {
                pending_space = true;
                continue;
            }
            if (pending_space && seen_word) out.push_back(' ');
            pending_space = false;
            seen_word = true;
            append_utf8(out, cp);
        }
    } else {
        for (char32_t cp : mapped) append_utf8(out, cp);
    }
    return out;
}

}  // namespace kidc::textnorm
