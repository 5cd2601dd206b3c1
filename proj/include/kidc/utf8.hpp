#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kidc::textnorm {

// Minimal UTF-8 codec. Decoding is total: malformed sequences decode to
// U+FFFD so downstream passes never see raw bytes.
std::vector<char32_t> decode_utf8(std::string_view s);
void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(const std::vector<char32_t>& cps);

}  // namespace kidc::textnorm
