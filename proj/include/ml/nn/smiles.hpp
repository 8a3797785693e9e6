#pragma once

#include <string>
#include <vector>

#include "ml/matrix.hpp"

namespace ml {

struct SmilesVocab {
    std::vector<std::string> tokens;  // unique, ordered

    /// The 17-symbol vocabulary: c n o C N F = O ( ) 1 2 # Cl / S Br.
    static SmilesVocab default_vocab();
    /// One token per line.
    static SmilesVocab from_file(const std::string& path);

    std::size_t index_of(const std::string& token) const;  // throws when unknown
    std::size_t size() const { return tokens.size(); }
};

/// Greedy longest-match tokenization, so "Cl" and "Br" stay single tokens.
/// Unknown input is reported with its character position.
std::vector<std::string> smiles_tokenize(const std::string& s, const SmilesVocab& vocab);

/// max_len x |vocab| binary matrix; row t is the one-hot of token t and rows
/// past the sequence end stay zero. Sequences longer than max_len are errors.
Matrix smiles_one_hot(const std::string& s, const SmilesVocab& vocab, std::size_t max_len);

}  // namespace ml
