#ifndef CRMTEXT_SIMSEARCH_HPP
#define CRMTEXT_SIMSEARCH_HPP

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crmtext/corpus.hpp"
#include "crmtext/embeddings.hpp"

namespace crmtext {

/// Cosine similarity, clamped to [-1, 1]. Throws ConfigError when either
/// vector is all zero and ShapeError on length mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

struct SimilarityHit {
    std::string token;
    double similarity;
};

/// The topk nearest tokens to the query by cosine over target vectors,
/// excluding the query itself and the specials. Descending similarity, ties
/// broken lexicographically; fewer than topk hits come back when the
/// vocabulary is small. Throws ConfigError naming an out-of-vocabulary query.
std::vector<SimilarityHit> most_similar(const EmbeddingMatrix& matrix, std::string_view query,
                                        int topk);

/// The seed followed by its topk nearest tokens; never contains duplicates.
std::vector<std::string> expand_keywords(const EmbeddingMatrix& matrix, std::string_view seed,
                                         int topk);

/// Which notes mention which keyword, by exact token match.
struct MiningReport {
    struct KeywordHits {
        std::string keyword;
        std::vector<std::string> note_ids;  // corpus order, one entry per matching note
    };
    std::vector<KeywordHits> per_keyword;  // keyword order preserved
    std::size_t total_distinct_notes = 0;
};

MiningReport mine_notes(const std::vector<TokenizedNote>& notes,
                        const std::vector<std::string>& keywords);

}  // namespace crmtext

#endif  // CRMTEXT_SIMSEARCH_HPP
