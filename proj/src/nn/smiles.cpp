#include "ml/nn/smiles.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace ml {

SmilesVocab SmilesVocab::default_vocab() {
    return {{"c", "n", "o", "C", "N", "F", "=", "O", "(", ")", "1", "2", "#", "Cl", "/", "S",
             "Br"}};
}

SmilesVocab SmilesVocab::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("SmilesVocab: cannot open '" + path + "'");
    SmilesVocab v;
    std::set<std::string> seen;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!seen.insert(line).second) {
            throw std::runtime_error("SmilesVocab: duplicate token '" + line + "'");
        }
        v.tokens.push_back(line);
    }
    if (v.tokens.empty()) throw std::runtime_error("SmilesVocab: empty vocabulary file");
    return v;
}

std::size_t SmilesVocab::index_of(const std::string& token) const {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == token) return i;
    }
    throw std::invalid_argument("SmilesVocab: unknown token '" + token + "'");
}

std::vector<std::string> smiles_tokenize(const std::string& s, const SmilesVocab& vocab) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        // Longest match first.
        std::size_t best_len = 0;
        for (const auto& tok : vocab.tokens) {
            if (tok.size() > best_len && s.compare(pos, tok.size(), tok) == 0) {
                best_len = tok.size();
            }
        }
        if (best_len == 0) {
            throw std::invalid_argument("smiles_tokenize: unknown token at position " +
                                        std::to_string(pos) + " in '" + s + "'");
        }
        out.push_back(s.substr(pos, best_len));
        pos += best_len;
    }
    return out;
}

Matrix smiles_one_hot(const std::string& s, const SmilesVocab& vocab, std::size_t max_len) {
    const std::vector<std::string> tokens = smiles_tokenize(s, vocab);
    if (tokens.size() > max_len) {
        throw std::invalid_argument("smiles_one_hot: sequence of " +
                                    std::to_string(tokens.size()) + " tokens exceeds max_len " +
                                    std::to_string(max_len));
    }
    Matrix out(max_len, vocab.size());
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        out(t, vocab.index_of(tokens[t])) = 1.0;
    }
    return out;
}

}  // namespace ml
