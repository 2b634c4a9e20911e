#ifndef CRMTEXT_TASKS_HPP
#define CRMTEXT_TASKS_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crmtext/corpus.hpp"
#include "crmtext/embeddings.hpp"
#include "crmtext/neural.hpp"

namespace crmtext {

/// Supervised samples: fixed-length token-id rows with one integer label
/// each. label_names maps class ids to display strings; for binary tasks it
/// is {"low", "high"}, for agent identification the agent ids, for next-word
/// prediction the agent-local vocabulary.
struct Dataset {
    std::vector<std::int32_t> ids;  // num_rows * seq_len, row-major
    std::size_t num_rows = 0;
    std::size_t seq_len = 0;
    std::vector<int> labels;
    std::vector<std::string> label_names;
    int vocab_size = 0;

    std::span<const std::int32_t> row(std::size_t r) const {
        return {ids.data() + r * seq_len, seq_len};
    }
    int num_classes() const { return static_cast<int>(label_names.size()); }
    void validate() const;
};

/// Maps tokens to ids (OOV -> UNK), pads with PAD to length n or keeps the
/// first n ids. Output length is always exactly n.
std::vector<std::int32_t> encode_note(const std::vector<std::string>& tokens,
                                      const Vocabulary& vocab, int n = 100);

/// One row per note carrying a lead label; high -> 1, low -> 0, unlabelled
/// notes skipped. Throws ConfigError when no note is labelled.
Dataset make_lead_dataset(const std::vector<TokenizedNote>& notes, const Vocabulary& vocab,
                          int input_len = 100);

struct AgentDatasetOptions {
    std::int64_t min_words = 300000;  // total token threshold for an agent to become a class
    int input_len = 100;
};

/// Classes are the agents whose total token count reaches min_words, ordered
/// by descending word count (ties by agent id); notes of other agents are
/// excluded. Throws ConfigError with fewer than two qualifying agents.
Dataset make_agent_dataset(const std::vector<TokenizedNote>& notes, const Vocabulary& vocab,
                           AgentDatasetOptions options = {});

/// Three consecutive tokens predict the fourth. Builds an agent-local
/// vocabulary with min_count 1, so every window of 4 tokens within a note
/// yields one sample. Throws ConfigError when no note has 4 tokens.
struct NextwordData {
    Dataset dataset;  // seq_len 3, labels are vocabulary ids
    Vocabulary vocab;
};
NextwordData make_nextword_dataset(const std::vector<TokenizedNote>& agent_notes);

/// Deterministic shuffled split with |train| = round(fraction * N); every
/// row lands in exactly one part. Throws ConfigError on degenerate sizes.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double fraction,
                                          std::uint64_t seed);

/// Index of the global minimum, first occurrence on ties.
std::size_t early_stop_epoch(std::span<const double> val_losses);

enum class StopMode { full_run_best, patience };

struct TrainConfig {
    int max_epochs = 100;   // 125 is the multiclass default at the CLI
    int batch_size = 1024;  // 512 for multiclass
    double split_fraction = 0.9;
    std::uint64_t seed = 1;
    StopMode stop = StopMode::full_run_best;
    int patience = 0;  // epochs without improvement before stopping, patience mode only
    AdamConfig adam;

    void validate() const;
};

struct TrainReport {
    std::vector<double> train_loss, val_loss, train_acc, val_acc;
    std::size_t best_epoch = 0;  // 0-based index into the arrays
    double wall_seconds = 0.0;

    /// CSV with header epoch,train_loss,val_loss,train_acc,val_acc and
    /// 1-based epoch numbers.
    std::string to_csv() const;
};

struct TrainResult {
    ClassifierModel model;  // parameters restored from the best epoch
    TrainReport report;
};

using EpochLogger =
    std::function<void(int epoch, double train_loss, double val_loss, double train_acc,
                       double val_acc)>;

/// Splits the dataset, runs minibatch Adam with a seeded shuffle per epoch,
/// records both curves, and returns the parameters snapshotted at the
/// validation-loss minimum. Throws NumericError (with epoch/batch
/// diagnostics) if the loss stops being finite.
TrainResult train_classifier(const Dataset& dataset, const ModelConfig& model_cfg,
                             const TrainConfig& train_cfg,
                             const Matrix* pretrained_embedding = nullptr,
                             const EpochLogger& log = {});

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
    bool zero_support = false;
};

struct Metrics {
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    Matrix confusion;  // row-normalized by true-class support; zero rows for empty classes

    std::string to_report(const std::vector<std::string>& label_names) const;
    std::string confusion_csv(const std::vector<std::string>& label_names) const;
};

/// Accuracy, per-class precision/recall/F1 and the row-normalized confusion
/// matrix of the model over the dataset.
Metrics evaluate(const ClassifierModel& model, const Dataset& dataset);

/// Fraction of rows whose true label ranks among the k most probable
/// classes (k is clamped to the class count).
double topk_accuracy(const ClassifierModel& model, const Dataset& dataset, int k = 3);

struct Prediction {
    std::string token;
    double probability;
};

/// Ranked next-word candidates for three context words encoded in the
/// agent vocabulary. Throws ConfigError when topk exceeds the class count.
std::vector<Prediction> predict_next(const ClassifierModel& model, const Vocabulary& vocab,
                                     const std::vector<std::string>& words, int topk = 3);

/// Embedding table over `vocab`: rows copy the pretrained vector when the
/// token exists there, otherwise they are drawn uniform in +-0.5/dim from
/// rng. The PAD row stays zero.
Matrix remap_embeddings(const EmbeddingMatrix& pretrained, const Vocabulary& vocab, Rng& rng);

}  // namespace crmtext

#endif  // CRMTEXT_TASKS_HPP
