#pragma once

#include <map>
#include <string>
#include <string_view>

namespace kidc::textnorm {

struct NormalizationConfig {
    bool unify_chars = true;
    bool collapse_whitespace = true;
    bool strip_controls = true;
    bool casefold_latin = true;
};

// Unconditional character unification map. Shipped as a human-readable data
// file (one "SRC<TAB>DST" pair per line, U+XXXX notation, "#" comments) so the
// repertoire can be extended without code changes. Loading rejects entries
// whose target is itself remapped or is whitespace: both would break the
// normalizer's idempotence and token-count guarantees.
class UnificationTable {
public:
    static const UnificationTable& builtin();
    static UnificationTable load(const std::string& path);
    static UnificationTable parse(std::string_view content, const std::string& origin);

    // 0 means "no mapping"
    char32_t map(char32_t cp) const;
    std::size_t size() const { return map_.size(); }

private:
    std::map<char32_t, char32_t> map_;
    void insert(char32_t src, char32_t dst, const std::string& origin, std::size_t line);
    void validate(const std::string& origin) const;
};

// Canonicalizes Arabic-script Sorani text:
//   - presentation variants mapped per the unification table (Arabic Yeh and
//     Alef Maksura to Farsi Yeh, Kaf to Keheh, eastern digits to ASCII, ...)
//   - word-final Teh Marbuta to Ae (U+0629 -> U+06D5)
//   - tatweel and harakat dropped; zero-width and control characters dropped,
//     ZWNJ (U+200C) kept because it is orthographic in Sorani
//   - whitespace runs collapsed to single spaces, ends trimmed
//   - Latin letters lowercased; Arabic script has no case and is untouched
// Total on valid unicode and idempotent.
std::string normalize(std::string_view text, const NormalizationConfig& cfg = {},
                      const UnificationTable& table = UnificationTable::builtin());

bool is_whitespace(char32_t cp);

}  // namespace kidc::textnorm
