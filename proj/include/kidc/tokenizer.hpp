#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kidc::tokenizer {

// Special token ids are fixed by the vocab file layout: the first four lines
// are [PAD], [UNK], [CLS], [SEP]. [PAD] sits at id 0 so zero-initialized
// buffers are valid padding.
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr const char* kSpecialTokens[4] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

// Ordered subword table; ids are dense 0..size-1 in file line order.
// Immutable after construction and safe to share across threads.
class Vocab {
public:
    static Vocab from_tokens(std::vector<std::string> tokens,
                             std::string continuation_prefix = "##");
    static Vocab load(const std::string& path);
    void save(const std::string& path) const;

    std::size_t size() const { return tokens_.size(); }
    // -1 when the token is unknown
    int id_of(std::string_view token) const;
    const std::string& token(std::size_t id) const { return tokens_.at(id); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::string& continuation_prefix() const { return continuation_prefix_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    std::string continuation_prefix_;
};

struct TokenizedInput {
    std::vector<int> ids;   // length max_len, [CLS] pieces... [SEP] [PAD]...
    std::vector<int> mask;  // 1 for real tokens, then 0s
    std::size_t real_len = 0;
};

// Deterministic frequency-merge trainer: character alphabet (initial and
// continuation forms of every character seen >= min_freq times), then
// iterative merges of the most frequent adjacent pair until target_size is
// reached or no pair meets min_freq. Ties break lexicographically, so two
// runs over the same corpus produce byte-identical vocab files.
Vocab train_vocab(const std::vector<std::string>& corpus_lines, std::size_t target_size,
                  std::size_t min_freq);

// Whitespace pre-split, then greedy longest-match subword segmentation per
// word; a word with no match decomposes to [UNK]. The piece tail is dropped
// before placing [SEP] when the sequence would exceed max_len.
TokenizedInput encode(std::string_view normalized_text, const Vocab& vocab, std::size_t max_len);

// Specials dropped, continuation prefixes spliced, words joined by spaces.
std::string decode(const std::vector<int>& ids, const Vocab& vocab);

}  // namespace kidc::tokenizer
