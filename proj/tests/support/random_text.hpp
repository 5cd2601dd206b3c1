#pragma once

// Random unicode text for fuzz/property tests, biased toward the ranges the
// pipeline actually has to survive: Arabic script, Latin, digits, whitespace,
// zero-width characters, and a sprinkle of astral codepoints.

#include <string>

#include "kidc/rng.hpp"
#include "kidc/utf8.hpp"

namespace kidc::testing {

inline char32_t random_codepoint(num::Rng& rng) {
    switch (rng.index(10)) {
        case 0: return static_cast<char32_t>(0x20 + rng.index(0x5F));            // ASCII
        case 1: return static_cast<char32_t>(0x0600 + rng.index(0x100));         // Arabic
        case 2: return static_cast<char32_t>(0x06A0 + rng.index(0x40));          // Sorani letters
        case 3: {                                                                // whitespace-ish
            constexpr char32_t ws[] = {0x09, 0x0A, 0x0D, 0x20, 0xA0, 0x2003, 0x3000};
            return ws[rng.index(sizeof(ws) / sizeof(ws[0]))];
        }
        case 4: {                                                                // zero-width
            constexpr char32_t zw[] = {0x200B, 0x200C, 0x200D, 0x200E, 0xFEFF, 0x00AD};
            return zw[rng.index(sizeof(zw) / sizeof(zw[0]))];
        }
        case 5: return static_cast<char32_t>(0x0660 + rng.index(10));            // eastern digits
        case 6: return static_cast<char32_t>(0x00C0 + rng.index(0x40));          // Latin-1
        case 7: return static_cast<char32_t>(0x4E00 + rng.index(0x100));         // CJK
        case 8: return static_cast<char32_t>(0x1F300 + rng.index(0x100));        // astral
        default: return static_cast<char32_t>(1 + rng.index(0x1F));              // controls
    }
}

inline std::string random_text(num::Rng& rng, std::size_t max_len) {
    std::string out;
    std::size_t n = rng.index(max_len + 1);
    for (std::size_t i = 0; i < n; ++i) textnorm::append_utf8(out, random_codepoint(rng));
    return out;
}

}  // namespace kidc::testing
