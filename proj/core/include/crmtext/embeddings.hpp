#ifndef CRMTEXT_EMBEDDINGS_HPP
#define CRMTEXT_EMBEDDINGS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "crmtext/corpus.hpp"
#include "crmtext/matrix.hpp"
#include "crmtext/rng.hpp"

namespace crmtext {

/// Hyperparameters for skip-gram training with negative sampling.
struct SgnsConfig {
    int dim = 50;             // embedding size; 50/100/200/300 are the usual sweep
    int window = 2;           // context radius in both directions
    int negatives = 5;        // negative samples per positive pair
    int epochs = 5;           // full corpus passes
    double initial_lr = 0.025;
    double final_lr = 0.0001;  // linear decay target over all steps
    double neg_power = 0.75;   // unigram distortion; 1.0 = raw frequency, 0 = uniform
    std::uint64_t seed = 1;
    int threads = 1;  // >1 enables lock-free shared updates and forfeits determinism

    void validate() const;
};

/// Target and context vector tables, one row per vocabulary entry.
/// The exported embedding of a token is its target row.
class EmbeddingMatrix {
public:
    EmbeddingMatrix(Vocabulary vocab, int dim);

    const Vocabulary& vocab() const { return vocab_; }
    int dim() const { return static_cast<int>(target_.cols()); }

    Matrix& target() { return target_; }
    const Matrix& target() const { return target_; }
    Matrix& context() { return context_; }
    const Matrix& context() const { return context_; }

    std::span<const double> vector_of(int id) const { return target_.row(static_cast<std::size_t>(id)); }

private:
    Vocabulary vocab_;
    Matrix target_;
    Matrix context_;
};

/// Numerically stable logistic function.
double sigmoid(double x);

/// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x);

/// One positive example: a target token and one of its in-window neighbours.
struct TrainingPair {
    std::int32_t target_id;
    std::int32_t context_id;
};

/// Emits (tokens[i], tokens[j]) for every i and every j != i with
/// |i - j| <= window, scanning i then j left to right. Pairs touching the
/// PAD id are skipped.
std::vector<TrainingPair> generate_pairs(std::span<const std::int32_t> tokens, int window);

/// Draws negative-sample ids from the unigram distribution raised to
/// neg_power, renormalized over eligible tokens: specials and the caller's
/// forbidden set are excluded.
class NegativeSampler {
public:
    NegativeSampler(const Vocabulary& vocab, double neg_power);

    /// Appends k eligible ids to out. Throws ConfigError when no token is
    /// eligible against the forbidden set.
    void sample(int k, std::span<const std::int32_t> forbidden, Rng& rng,
                std::vector<std::int32_t>& out) const;

    std::vector<std::int32_t> sample(int k, std::span<const std::int32_t> forbidden, Rng& rng) const;

private:
    const Vocabulary* vocab_;
    AliasSampler table_;
    std::vector<char> eligible_;
    int eligible_count_ = 0;
};

/// Per-pair objective: log sig(c.t) + sum_i log sig(-n_i.t). Maximized by
/// training; the trainer descends on its negation.
double sgns_objective(std::span<const double> target, std::span<const double> context,
                      const std::vector<std::span<const double>>& negatives);

/// One gradient-ascent step on the per-pair objective, updating the target
/// row of the target table and the context/negative rows of the context
/// table in place. All deltas are computed from pre-step values.
void sgns_step(EmbeddingMatrix& matrix, TrainingPair pair,
               std::span<const std::int32_t> negative_ids, double lr);

/// Maps note tokens to vocabulary ids (OOV -> UNK) for training.
std::vector<std::vector<std::int32_t>> encode_for_sgns(const std::vector<TokenizedNote>& notes,
                                                       const Vocabulary& vocab);

using EpochCallback = std::function<void(int epoch, const EmbeddingMatrix&)>;

/// Trains embeddings over the encoded corpus. The target table starts
/// uniform in [-0.5/dim, 0.5/dim], the context table at zero; the learning
/// rate decays linearly from initial_lr to final_lr across all steps.
/// Single-threaded runs are bitwise reproducible for a fixed seed.
EmbeddingMatrix train_embeddings(const std::vector<std::vector<std::int32_t>>& encoded_notes,
                                 const Vocabulary& vocab, const SgnsConfig& config,
                                 const EpochCallback& on_epoch = {});

/// Text format: header line "V D", then V lines of "token v1 .. vD". Values
/// round-trip exactly through the %.17g representation.
void save_vectors(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

/// Loads the target table written by save_vectors; the context table comes
/// back zeroed. Throws ParseError (with the line number) on malformed input.
EmbeddingMatrix load_vectors(const std::filesystem::path& path);

}  // namespace crmtext

#endif  // CRMTEXT_EMBEDDINGS_HPP
