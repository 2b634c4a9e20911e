#include "crmtext/simsearch.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace crmtext {

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw ShapeError("cosine: dimension mismatch");
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uu += u[i] * u[i];
        vv += v[i] * v[i];
        uv += u[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) throw ConfigError("cosine: zero vector");
    return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

std::vector<SimilarityHit> most_similar(const EmbeddingMatrix& matrix, std::string_view query,
                                        int topk) {
    if (topk < 1) throw ConfigError("topk must be >= 1");
    const Vocabulary& vocab = matrix.vocab();
    if (!vocab.contains(query))
        throw ConfigError("token '" + std::string(query) + "' not in vocabulary");
    const int query_id = vocab.id_of(query);
    auto query_vec = matrix.vector_of(query_id);

    std::vector<SimilarityHit> hits;
    hits.reserve(static_cast<std::size_t>(vocab.size()));
    for (int id = Vocabulary::kNumSpecials; id < vocab.size(); ++id) {
        if (id == query_id) continue;
        hits.push_back(SimilarityHit{vocab.token_of(id), cosine(query_vec, matrix.vector_of(id))});
    }
    auto better = [](const SimilarityHit& a, const SimilarityHit& b) {
        return a.similarity != b.similarity ? a.similarity > b.similarity : a.token < b.token;
    };
    std::size_t keep = std::min(hits.size(), static_cast<std::size_t>(topk));
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                      better);
    hits.resize(keep);
    return hits;
}

std::vector<std::string> expand_keywords(const EmbeddingMatrix& matrix, std::string_view seed,
                                         int topk) {
    if (topk < 0) throw ConfigError("topk must be >= 0");
    std::vector<std::string> keywords{std::string(seed)};
    if (topk > 0) {
        for (SimilarityHit& hit : most_similar(matrix, seed, topk))
            keywords.push_back(std::move(hit.token));
    } else if (!matrix.vocab().contains(seed)) {
        throw ConfigError("token '" + std::string(seed) + "' not in vocabulary");
    }
    return keywords;
}

MiningReport mine_notes(const std::vector<TokenizedNote>& notes,
                        const std::vector<std::string>& keywords) {
    MiningReport report;
    report.per_keyword.reserve(keywords.size());
    std::unordered_set<const TokenizedNote*> distinct;
    for (const std::string& keyword : keywords) {
        MiningReport::KeywordHits hits;
        hits.keyword = keyword;
        for (const TokenizedNote& note : notes) {
            if (std::find(note.tokens.begin(), note.tokens.end(), keyword) != note.tokens.end()) {
                hits.note_ids.push_back(note.note_id);
                distinct.insert(&note);
            }
        }
        report.per_keyword.push_back(std::move(hits));
    }
    report.total_distinct_notes = distinct.size();
    return report;
}

}  // namespace crmtext
