#ifndef CRMTEXT_NEURAL_HPP
#define CRMTEXT_NEURAL_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crmtext/matrix.hpp"
#include "crmtext/rng.hpp"

namespace crmtext {

enum class HeadType { sigmoid, softmax };

constexpr int kNumGates = 4;
enum GateIndex { kGateInput = 0, kGateForget = 1, kGateOutput = 2, kGateCandidate = 3 };

/// LSTM cell parameters for one direction. Gate order everywhere is
/// input, forget, output, candidate.
struct LstmParams {
    std::array<Matrix, kNumGates> wx;  // hidden x input
    std::array<Matrix, kNumGates> wh;  // hidden x hidden
    std::array<Matrix, kNumGates> b;   // hidden x 1

    LstmParams() = default;
    LstmParams(int input_dim, int hidden_dim);

    int input_dim() const { return static_cast<int>(wx[0].cols()); }
    int hidden_dim() const { return static_cast<int>(wx[0].rows()); }
};

/// Shape and initialization parameters of a sequence classifier:
/// embedding lookup -> bidirectional LSTM -> ReLU dense layer -> output head.
/// classes == 1 selects the single sigmoid unit, classes >= 2 the softmax
/// layer.
struct ModelConfig {
    int vocab_size = 0;
    int embed_dim = 0;
    int hidden = 64;
    int dense = 256;
    int classes = 1;
    bool train_embedding = false;
    std::uint64_t seed = 1;

    HeadType head() const { return classes == 1 ? HeadType::sigmoid : HeadType::softmax; }
    int head_rows() const { return classes == 1 ? 1 : classes; }
    void validate() const;
};

/// Every parameter tensor of the classifier, in the fixed order used for
/// serialization, Adam state, and gradient reports. Doubles as the gradient
/// carrier since gradients mirror parameter shapes exactly.
struct ParamTensors {
    Matrix embedding;  // vocab x embed, PAD row pinned to zero
    LstmParams fwd;
    LstmParams bwd;
    Matrix dense_w;  // dense x 2*hidden
    Matrix dense_b;  // dense x 1
    Matrix head_w;   // head_rows x dense
    Matrix head_b;   // head_rows x 1

    static ParamTensors shaped(const ModelConfig& cfg);

    template <typename Fn>
    void for_each(Fn&& fn) {
        visit(*this, fn);
    }
    template <typename Fn>
    void for_each(Fn&& fn) const {
        visit(*this, fn);
    }

    std::vector<Matrix*> tensors();
    std::vector<const Matrix*> tensors() const;

private:
    template <typename Self, typename Fn>
    static void visit(Self& self, Fn&& fn) {
        constexpr const char* gates[kNumGates] = {"input", "forget", "output", "candidate"};
        fn(std::string("embedding"), self.embedding);
        auto visit_dir = [&](const char* prefix, auto& p) {
            for (int g = 0; g < kNumGates; ++g)
                fn(std::string(prefix) + ".wx." + gates[g], p.wx[static_cast<std::size_t>(g)]);
            for (int g = 0; g < kNumGates; ++g)
                fn(std::string(prefix) + ".wh." + gates[g], p.wh[static_cast<std::size_t>(g)]);
            for (int g = 0; g < kNumGates; ++g)
                fn(std::string(prefix) + ".b." + gates[g], p.b[static_cast<std::size_t>(g)]);
        };
        visit_dir("fwd", self.fwd);
        visit_dir("bwd", self.bwd);
        fn(std::string("dense.w"), self.dense_w);
        fn(std::string("dense.b"), self.dense_b);
        fn(std::string("head.w"), self.head_w);
        fn(std::string("head.b"), self.head_b);
    }
};

using Gradients = ParamTensors;

struct ClassifierModel {
    ModelConfig cfg;
    ParamTensors params;

    /// Fresh model: weight matrices uniform in +-1/sqrt(fan_in), biases zero
    /// except the forget gate at +1, embedding rows uniform in
    /// +-1/sqrt(embed_dim) with the PAD row zeroed. Seeded from cfg.seed.
    /// When pretrained_embedding is given it must be vocab x embed and is
    /// copied in (PAD row re-zeroed) instead of the random table.
    static ClassifierModel init(const ModelConfig& cfg, const Matrix* pretrained_embedding = nullptr);
};

// --- kernels ----------------------------------------------------------------

/// Row-gather: returns |ids| x embed. Throws ConfigError on out-of-range ids.
Matrix embed_lookup(const Matrix& table, std::span<const std::int32_t> ids);

/// One LSTM step. h_out and c_out must be sized to the hidden dim and may
/// not alias h_prev/c_prev.
void lstm_cell(const LstmParams& p, std::span<const double> x, std::span<const double> h_prev,
               std::span<const double> c_prev, std::span<double> h_out, std::span<double> c_out);

/// Runs the forward direction left to right and the backward direction right
/// to left, both from zero states, and returns the concatenation of the two
/// final hidden states (length 2*hidden). Throws ConfigError on an empty
/// sequence.
std::vector<double> bilstm_encode(const Matrix& inputs, const LstmParams& fwd,
                                  const LstmParams& bwd);

/// max(0, w x + b)
std::vector<double> dense_relu(std::span<const double> x, const Matrix& w, const Matrix& b);

/// sigmoid(w . x + b) for a 1 x n weight row.
double sigmoid_head(std::span<const double> x, const Matrix& w, const Matrix& b);

/// Max-subtracted softmax over w x + b; entries are positive and sum to 1.
std::vector<double> softmax_head(std::span<const double> x, const Matrix& w, const Matrix& b);

std::vector<double> softmax(std::span<const double> logits);

/// Probabilities are clamped to [kProbEps, 1 - kProbEps] inside both losses.
inline constexpr double kProbEps = 1e-7;

/// Mean binary cross entropy over labels in {0,1}.
double bce_loss(std::span<const double> labels, std::span<const double> probs);

/// Mean categorical cross entropy between one-hot rows and probability rows.
double cce_loss(const Matrix& onehot, const Matrix& probs);

// --- batches, backprop, optimization ----------------------------------------

/// Fixed-length id rows with one integer label per row.
struct Batch {
    std::vector<std::int32_t> ids;  // num_rows * seq_len, row-major
    std::size_t num_rows = 0;
    std::size_t seq_len = 0;
    std::vector<int> labels;

    std::span<const std::int32_t> row(std::size_t r) const {
        return {ids.data() + r * seq_len, seq_len};
    }
    void validate(const ModelConfig& cfg) const;
};

/// Output probabilities for one sequence: {p} for the sigmoid head, the full
/// distribution for the softmax head.
std::vector<double> forward_scores(const ClassifierModel& model, std::span<const std::int32_t> ids);

/// Per-sample loss term given head probabilities: binary cross entropy for
/// the sigmoid head (probs = {p}), -log p_label for softmax. Clamped like
/// the batch losses.
double head_loss(HeadType head, std::span<const double> probs, int label);

/// Predicted class: threshold 0.5 for sigmoid, argmax (lowest id wins ties)
/// for softmax.
int head_prediction(HeadType head, std::span<const double> probs);

/// Mean loss of the batch under the model, forward pass only.
double batch_loss(const ClassifierModel& model, const Batch& batch);

struct BackwardResult {
    double loss = 0.0;
    std::size_t correct = 0;  // threshold-0.5 or argmax hits, for accuracy tracking
    Gradients grads;
};

/// Exact gradients of the mean batch loss for every trainable parameter.
/// A frozen embedding table gets an identically zero gradient and the PAD
/// row is zero in all cases.
BackwardResult backward(const ClassifierModel& model, const Batch& batch);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam over the full tensor set. Moment accumulators mirror
/// parameter shapes; one step() call advances the shared step counter once.
class AdamState {
public:
    AdamState(const ModelConfig& shape, AdamConfig cfg = {});

    void step(ParamTensors& params, const Gradients& grads);

    std::int64_t steps() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    ParamTensors m_;
    ParamTensors v_;
    std::int64_t step_count_ = 0;
};

// --- gradient verification ---------------------------------------------------

struct GradCheckReport {
    struct Group {
        std::string name;
        double max_rel_err = 0.0;
    };
    std::vector<Group> groups;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool passed = false;

    std::string to_string() const;
};

using GradientMutator = std::function<void(Gradients&)>;

/// Compares analytic gradients against central finite differences of
/// batch_loss (step h) per parameter group. Relative error uses
/// |a - n| / max(|a|, |n|, 1e-6). The optional mutator tampers with the
/// analytic gradients before comparison, for self-tests of the checker.
GradCheckReport grad_check(const ClassifierModel& model, const Batch& batch, double tolerance,
                           double h = 1e-5, const GradientMutator& mutate = {});

/// grad_check on a freshly seeded tiny model and random batch.
GradCheckReport grad_check_random(std::uint64_t seed, HeadType head, double tolerance,
                                  double h = 1e-5, const GradientMutator& mutate = {});

// --- persistence --------------------------------------------------------------
//
// A checkpoint is two files sharing a prefix: <prefix>.manifest, UTF-8
// "key: value" lines describing dims, head, flags, seed, and the tensor list
// in order; and <prefix>.params, the tensors' values as little-endian 32-bit
// floats, row-major, concatenated in manifest order with no padding.

void save_checkpoint(const ClassifierModel& model, const std::string& prefix,
                     const std::vector<std::pair<std::string, std::string>>& extra = {});

struct Checkpoint {
    ClassifierModel model;
    std::map<std::string, std::string> extra;
};

Checkpoint load_checkpoint(const std::string& prefix);

}  // namespace crmtext

#endif  // CRMTEXT_NEURAL_HPP
