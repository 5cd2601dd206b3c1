#include <set>
#include <tuple>

#include "kidc/dataset.hpp"
#include "kidc/errors.hpp"
#include "kidc/rng.hpp"

namespace kidc::dataset {

namespace {

// Word pools for the templated context frames (normalized Sorani).
const char* kSubjects[] = {"ئەو",      "براکەم",   "خوشکەکەم", "هاوڕێکەم", "مامۆستاکە",
                           "دراوسێکە", "منداڵەکە", "کچەکە",    "پیاوەکە",  "ژنەکە"};
const char* kPlaces[] = {"لە ماڵەوە", "لە بازاڕ",     "لە شار",   "لە گوند",
                         "لە باخچە",  "لە قوتابخانە", "لە شەقام"};
const char* kTimes[] = {"ئەمڕۆ", "دوێنێ", "بەیانی", "ئێوارە", "هەفتەی پێشوو", "ساڵی پار"};
const char* kVerbs[] = {"باسی کرد", "گێڕایەوە", "وتی", "زانی", "بینی"};

// Marker phrases are built from two-syllable pseudo-words; the filler words of
// non-idiom sentences start with a different syllable inventory so no class
// signal leaks between them.
const char* kSyllables[] = {"با",  "ران", "دڵ",  "سەر", "چاو", "دەست", "بەرد",
                            "ئاو", "گوڵ", "ڕۆژ", "شەو", "ناو", "ڕێ",   "کار",
                            "خۆر", "هەڵ", "گرت", "خست", "برد", "هات"};
constexpr std::size_t kNumSyllables = sizeof(kSyllables) / sizeof(kSyllables[0]);

template <std::size_t N>
const char* pick(const char* (&pool)[N], std::size_t i) {
    return pool[i % N];
}

std::string two_syllable_word(std::size_t a, std::size_t b) {
    return std::string(kSyllables[a % kNumSyllables]) + kSyllables[b % kNumSyllables];
}

// base-N syllable spelling of n, prefixed so it can never equal a marker word
std::string serial_word(std::size_t n) {
    std::string w = "وە";
    do {
        w += kSyllables[n % kNumSyllables];
        n /= kNumSyllables;
    } while (n > 0);
    return w;
}

std::string frame(std::size_t context, std::size_t variant, const std::string& core) {
    constexpr std::size_t ns = sizeof(kSubjects) / sizeof(kSubjects[0]);
    constexpr std::size_t np = sizeof(kPlaces) / sizeof(kPlaces[0]);
    const char* subject = pick(kSubjects, context % ns);
    const char* place = pick(kPlaces, (context / ns) % np);
    const char* time = pick(kTimes, context / (ns * np));
    const char* verb = pick(kVerbs, context);
    std::string extra = variant >= 3 ? " " + serial_word(variant / 3) : "";
    switch (variant % 3) {
        case 0:  // declarative
            return std::string(time) + " " + subject + " " + place + " " + core + " " + verb + "." +
                   extra;
        case 1:  // question
            return std::string("ئایا ") + subject + " " + time + " " + place + " " + core + " " +
                   verb + "؟" + extra;
        default:  // conditional
            return std::string("ئەگەر ") + subject + " " + place + " " + core + " " + verb +
                   " ئەوا " + time + " باشە." + extra;
    }
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.num_idioms < 1 || spec.contexts_per_idiom < 1 || spec.variants_per_context < 1) {
        throw InvalidInput("synthetic spec: idiom/context/variant counts must all be >= 1");
    }
    num::Rng rng = num::Rng::stream(spec.seed, 0xD5);

    // unique two-word marker phrase per idiom
    std::set<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> used;
    std::vector<std::string> markers;
    markers.reserve(spec.num_idioms);
    while (markers.size() < spec.num_idioms) {
        std::tuple<std::size_t, std::size_t, std::size_t, std::size_t> combo = {
            rng.index(kNumSyllables), rng.index(kNumSyllables), rng.index(kNumSyllables),
            rng.index(kNumSyllables)};
        if (!used.insert(combo).second) continue;
        markers.push_back(two_syllable_word(std::get<0>(combo), std::get<1>(combo)) + " " +
                          two_syllable_word(std::get<2>(combo), std::get<3>(combo)));
    }

    std::vector<std::tuple<long, std::string, std::string>> rows;
    rows.reserve(spec.num_idioms * spec.contexts_per_idiom * spec.variants_per_context +
                 spec.non_idiom_count);
    for (std::size_t i = 0; i < spec.num_idioms; ++i) {
        for (std::size_t c = 0; c < spec.contexts_per_idiom; ++c) {
            for (std::size_t v = 0; v < spec.variants_per_context; ++v) {
                rows.emplace_back(static_cast<long>(i), frame(c, v, markers[i]), markers[i]);
            }
        }
    }
    for (std::size_t n = 0; n < spec.non_idiom_count; ++n) {
        std::size_t c = n % spec.contexts_per_idiom;
        std::size_t v = (n / spec.contexts_per_idiom) % spec.variants_per_context;
        // the serial word keeps every non-idiom sentence globally unique
        std::string core = "شتی " + serial_word(n);
        rows.emplace_back(static_cast<long>(spec.num_idioms), frame(c, v, core), "");
    }
    return build_dataset(rows, "synthetic");
}

}  // namespace kidc::dataset
