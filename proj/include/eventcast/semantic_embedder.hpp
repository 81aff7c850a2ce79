#pragma once

#include "eventcast/error.hpp"
#include "eventcast/io.hpp"
#include "eventcast/linalg.hpp"
#include "eventcast/summary_parser.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace eventcast {

/// Token <-> id table. Ids 0 and 1 are reserved for PAD and UNK; real tokens
/// get ids in first-seen order.
class Vocab {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    Vocab() : tokens_{"<pad>", "<unk>"} {}

    int add(const std::string& token) {
        auto [it, inserted] = ids_.try_emplace(token, static_cast<int>(tokens_.size()));
        if (inserted) tokens_.push_back(token);
        return it->second;
    }

    int id(const std::string& token) const {
        auto it = ids_.find(token);
        return it == ids_.end() ? kUnk : it->second;
    }

    bool contains(const std::string& token) const { return ids_.count(token) != 0; }

    const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }

    std::size_t size() const { return tokens_.size(); }

    bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

    /// One token per line; line n (0-based) holds id n + 2.
    std::string serialize() const {
        std::string out;
        for (std::size_t i = 2; i < tokens_.size(); ++i) out += tokens_[i] + "\n";
        return out;
    }

    static Vocab deserialize(std::string_view content) {
        Vocab v;
        std::size_t start = 0;
        while (start < content.size()) {
            auto nl = content.find('\n', start);
            if (nl == std::string_view::npos) nl = content.size();
            std::string tok(content.substr(start, nl - start));
            if (tok.empty()) throw DataError("vocab file contains an empty token");
            if (v.contains(tok)) throw DataError("vocab file repeats token '" + tok + "'");
            v.add(tok);
            start = nl + 1;
        }
        return v;
    }

    void save(const std::filesystem::path& p) const { io::write_file_atomic(p, serialize()); }
    static Vocab load(const std::filesystem::path& p) { return deserialize(io::read_file(p)); }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

/// Splits a normalized field on single spaces.
inline std::vector<std::string> split_tokens(std::string_view field) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= field.size()) {
        auto sp = field.find(' ', start);
        if (sp == std::string_view::npos) sp = field.size();
        if (sp > start) out.emplace_back(field.substr(start, sp - start));
        start = sp + 1;
    }
    return out;
}

inline Vocab build_vocab(std::span<const SummaryFields> corpus) {
    Vocab v;
    for (const auto& s : corpus)
        for (const auto& f : s.fields)
            for (const auto& t : split_tokens(f)) v.add(t);
    return v;
}

inline std::vector<int> tokenize(std::string_view field, const Vocab& vocab) {
    std::vector<int> ids;
    for (const auto& t : split_tokens(field)) ids.push_back(vocab.id(t));
    return ids;
}

/// Token ids of all fields concatenated in field order.
inline std::vector<int> flatten_tokens(const SummaryFields& s, const Vocab& vocab) {
    std::vector<int> ids;
    for (const auto& f : s.fields) {
        auto part = tokenize(f, vocab);
        ids.insert(ids.end(), part.begin(), part.end());
    }
    return ids;
}

template <class S> struct SemanticEmbeddingParams {
    Matrix<S> token_table; // [vocab_size x d_align]
    Matrix<S> pos_table;   // [max_positions x d_align]

    static SemanticEmbeddingParams init(std::size_t vocab_size, std::size_t max_positions, std::size_t d_align,
                                        Rng& rng) {
        SemanticEmbeddingParams p;
        const double bound = 1.0 / std::sqrt(static_cast<double>(d_align));
        p.token_table.resize(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(d_align));
        p.pos_table.resize(static_cast<Eigen::Index>(max_positions), static_cast<Eigen::Index>(d_align));
        fill_uniform(p.token_table, bound, rng);
        fill_uniform(p.pos_table, bound, rng);
        return p;
    }

    Eigen::Index d_align() const { return token_table.cols(); }
};

/// Sum over the flattened token sequence of token embedding plus the
/// embedding of its global position.
template <class S> Vector<S> embed_tokens(std::span<const int> ids, const SemanticEmbeddingParams<S>& p) {
    if (static_cast<Eigen::Index>(ids.size()) > p.pos_table.rows())
        throw PositionOverflow(ids.size(), static_cast<std::size_t>(p.pos_table.rows()));
    Vector<S> h = Vector<S>::Zero(p.d_align());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= p.token_table.rows()) throw DataError("token id out of range");
        h += p.token_table.row(ids[i]).transpose() + p.pos_table.row(static_cast<Eigen::Index>(i)).transpose();
    }
    return h;
}

template <class S>
Vector<S> embed_summary(const SummaryFields& fields, const SemanticEmbeddingParams<S>& p, const Vocab& vocab) {
    auto ids = flatten_tokens(fields, vocab);
    return embed_tokens<S>(ids, p);
}

/// Accumulates d(loss)/d(tables) given d(loss)/d(h_sem).
template <class S>
void embed_tokens_backward(std::span<const int> ids, const Vector<S>& d_out, SemanticEmbeddingParams<S>& grads) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
        grads.token_table.row(ids[i]) += d_out.transpose();
        grads.pos_table.row(static_cast<Eigen::Index>(i)) += d_out.transpose();
    }
}

} // namespace eventcast
