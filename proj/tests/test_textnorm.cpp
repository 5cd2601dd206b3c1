#include <doctest.h>

#include <string>
#include <vector>

#include "kidc/errors.hpp"
#include "kidc/textnorm.hpp"
#include "kidc/utf8.hpp"
#include "support/random_text.hpp"

using namespace kidc::textnorm;
using kidc::InvalidInput;
using kidc::num::Rng;

namespace {

std::size_t word_count(const std::string& s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char32_t cp : decode_utf8(s)) {
        if (is_whitespace(cp)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

std::string cp_str(char32_t cp) {
    std::string s;
    append_utf8(s, cp);
    return s;
}

}  // namespace

TEST_CASE("normalize basics: empty input, casefold, whitespace collapse") {
    CHECK(normalize("") == "");
    CHECK(normalize("A  B") == "a b");
    CHECK(normalize("  x \t\n y  ") == "x y");
    CHECK(normalize("ÀÉÎ") == "àéî");
}

TEST_CASE("every unification table entry is applied") {
    const UnificationTable& t = UnificationTable::builtin();
    // oracle: apply the documented table entry-by-entry
    CHECK(normalize(cp_str(0x0643)) == cp_str(0x06A9));  // Kaf -> Keheh
    CHECK(normalize(cp_str(0x064A)) == cp_str(0x06CC));
    CHECK(normalize(cp_str(0x0649)) == cp_str(0x06CC));
    CHECK(normalize("٤٢") == "42");
    CHECK(normalize("۴۲") == "42");
    std::vector<std::pair<char32_t, char32_t>> entries;
    for (char32_t cp = 0; cp <= 0x10FFFF; ++cp) {
        if (char32_t dst = t.map(cp)) entries.emplace_back(cp, dst);
    }
    CHECK(entries.size() == t.size());
    for (auto [src, dst] : entries) {
        CHECK(normalize(cp_str(src)) == cp_str(dst));
    }
}

TEST_CASE("word-final teh marbuta becomes ae, medial is untouched") {
    std::string final_form = cp_str(0x0645) + cp_str(0x0629);
    CHECK(normalize(final_form) == cp_str(0x0645) + cp_str(0x06D5));
    std::string before_space = final_form + " " + cp_str(0x0645);
    CHECK(normalize(before_space) == cp_str(0x0645) + cp_str(0x06D5) + " " + cp_str(0x0645));
    std::string before_period = final_form + ".";
    CHECK(normalize(before_period) == cp_str(0x0645) + cp_str(0x06D5) + ".");
    std::string medial = cp_str(0x0645) + cp_str(0x0629) + cp_str(0x0645);
    CHECK(normalize(medial) == medial);
}

TEST_CASE("tatweel and harakat are dropped, ZWNJ survives") {
    std::string with_tatweel = cp_str(0x0628) + cp_str(0x0640) + cp_str(0x0627);
    CHECK(normalize(with_tatweel) == cp_str(0x0628) + cp_str(0x0627));
    std::string with_fatha = cp_str(0x0628) + cp_str(0x064E);
    CHECK(normalize(with_fatha) == cp_str(0x0628));
    std::string with_zwnj = cp_str(0x0628) + cp_str(0x200C) + cp_str(0x0627);
    CHECK(normalize(with_zwnj) == with_zwnj);
    std::string with_zwsp = cp_str(0x0628) + cp_str(0x200B) + cp_str(0x0627);
    CHECK(normalize(with_zwsp) == cp_str(0x0628) + cp_str(0x0627));
}

TEST_CASE("normalize is total on arbitrary bytes and idempotent on random unicode") {
    Rng rng(42);
    for (int rep = 0; rep < 500; ++rep) {
        std::string text = kidc::testing::random_text(rng, 60);
        std::string once = normalize(text);
        CHECK(normalize(once) == once);
        // never introduces new whitespace-separated words
        CHECK(word_count(once) <= word_count(text));
    }
}

TEST_CASE("already-normalized text is a fixed point") {
    std::string sorani = normalize("کتێبەکە لە ماڵەوەیە");
    CHECK(normalize(sorani) == sorani);
    CHECK(normalize("abc 123 xyz") == "abc 123 xyz");
}

TEST_CASE("table files: parse, comments, and structural validation") {
    UnificationTable t = UnificationTable::parse("# comment\nU+0041\tU+0061\n\nU+0042\tU+0061\n",
                                                 "test");
    CHECK(t.map(U'A') == U'a');
    CHECK(t.map(U'B') == U'a');
    CHECK(t.map(U'C') == 0);

    CHECK_THROWS_AS(UnificationTable::parse("U+0041 U+0061\n", "test"), InvalidInput);
    CHECK_THROWS_AS(UnificationTable::parse("U+0041\tU+0020\n", "test"), InvalidInput);   // ws target
    CHECK_THROWS_AS(UnificationTable::parse("U+0041\tU+0042\nU+0042\tU+0043\n", "test"),
                    InvalidInput);  // chained mapping breaks idempotence
    CHECK_THROWS_AS(UnificationTable::parse("U+0041\tU+0041\n", "test"), InvalidInput);
    CHECK_THROWS_AS(UnificationTable::parse("0041\tU+0061\n", "test"), InvalidInput);
}

TEST_CASE("shipped table file matches the built-in table") {
    UnificationTable shipped = UnificationTable::load(std::string(KIDC_SOURCE_DIR) +
                                                      "/data/sorani_unification.tsv");
    const UnificationTable& built = UnificationTable::builtin();
    CHECK(shipped.size() == built.size());
    for (char32_t cp = 0; cp <= 0xFFFF; ++cp) {
        CHECK(shipped.map(cp) == built.map(cp));
    }
}

TEST_CASE("config flags disable individual passes") {
    NormalizationConfig cfg;
    cfg.casefold_latin = false;
    CHECK(normalize("AB", cfg) == "AB");
    cfg = {};
    cfg.unify_chars = false;
    CHECK(normalize(cp_str(0x0643), cfg) == cp_str(0x0643));
    cfg = {};
    cfg.collapse_whitespace = false;
    CHECK(normalize("a  b", cfg) == "a  b");
}
