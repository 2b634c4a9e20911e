#include "crmtext/embeddings.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

namespace crmtext {

void SgnsConfig::validate() const {
    if (dim <= 0) throw ConfigError("embedding dim must be positive");
    if (window < 1) throw ConfigError("window must be >= 1");
    if (negatives < 1) throw ConfigError("negatives must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(final_lr > 0.0) || !(final_lr <= initial_lr))
        throw ConfigError("learning rates must satisfy 0 < final_lr <= initial_lr");
    if (neg_power < 0.0) throw ConfigError("neg_power must be >= 0");
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

EmbeddingMatrix::EmbeddingMatrix(Vocabulary vocab, int dim)
    : vocab_(std::move(vocab)),
      target_(static_cast<std::size_t>(vocab_.size()), static_cast<std::size_t>(dim)),
      context_(static_cast<std::size_t>(vocab_.size()), static_cast<std::size_t>(dim)) {
    if (dim <= 0) throw ConfigError("embedding dim must be positive");
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double log_sigmoid(double x) {
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

std::vector<TrainingPair> generate_pairs(std::span<const std::int32_t> tokens, int window) {
    if (window < 1) throw ConfigError("window must be >= 1");
    std::vector<TrainingPair> pairs;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(tokens.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (tokens[static_cast<std::size_t>(i)] == Vocabulary::kPadId) continue;
        std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
        std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + window);
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
            if (j == i) continue;
            if (tokens[static_cast<std::size_t>(j)] == Vocabulary::kPadId) continue;
            pairs.push_back(TrainingPair{tokens[static_cast<std::size_t>(i)],
                                         tokens[static_cast<std::size_t>(j)]});
        }
    }
    return pairs;
}

NegativeSampler::NegativeSampler(const Vocabulary& vocab, double neg_power) : vocab_(&vocab) {
    std::vector<double> weights(static_cast<std::size_t>(vocab.size()), 0.0);
    eligible_.assign(static_cast<std::size_t>(vocab.size()), 0);
    eligible_count_ = 0;
    for (int id = Vocabulary::kNumSpecials; id < vocab.size(); ++id) {
        double w = std::pow(static_cast<double>(vocab.count_of(id)), neg_power);
        weights[static_cast<std::size_t>(id)] = w;
        if (w > 0.0) {
            eligible_[static_cast<std::size_t>(id)] = 1;
            ++eligible_count_;
        }
    }
    if (eligible_count_ == 0) throw ConfigError("no eligible tokens for negative sampling");
    table_ = AliasSampler(weights);
}

void NegativeSampler::sample(int k, std::span<const std::int32_t> forbidden, Rng& rng,
                             std::vector<std::int32_t>& out) const {
    if (k < 0) throw ConfigError("negative sample count must be >= 0");
    auto is_forbidden = [&](std::int32_t id) {
        for (std::int32_t f : forbidden)
            if (f == id) return true;
        return false;
    };
    // The distribution conditioned on eligibility is realised by rejection;
    // it must have positive support or the loop below would never finish.
    int blocked = 0;
    for (std::size_t i = 0; i < forbidden.size(); ++i) {
        std::int32_t f = forbidden[i];
        if (f < 0 || f >= vocab_->size() || !eligible_[static_cast<std::size_t>(f)]) continue;
        bool dup = false;
        for (std::size_t j = 0; j < i; ++j)
            if (forbidden[j] == f) { dup = true; break; }
        if (!dup) ++blocked;
    }
    if (eligible_count_ - blocked <= 0)
        throw ConfigError("no eligible tokens for negative sampling after exclusions");

    out.reserve(out.size() + static_cast<std::size_t>(k));
    for (int drawn = 0; drawn < k;) {
        auto id = static_cast<std::int32_t>(table_.sample(rng));
        if (is_forbidden(id)) continue;
        out.push_back(id);
        ++drawn;
    }
}

std::vector<std::int32_t> NegativeSampler::sample(int k, std::span<const std::int32_t> forbidden,
                                                  Rng& rng) const {
    std::vector<std::int32_t> out;
    sample(k, forbidden, rng, out);
    return out;
}

double sgns_objective(std::span<const double> target, std::span<const double> context,
                      const std::vector<std::span<const double>>& negatives) {
    if (context.size() != target.size()) throw ShapeError("sgns_objective: dimension mismatch");
    double obj = log_sigmoid(dot(context, target));
    for (const auto& neg : negatives) {
        if (neg.size() != target.size()) throw ShapeError("sgns_objective: dimension mismatch");
        obj += log_sigmoid(-dot(neg, target));
    }
    return obj;
}

void sgns_step(EmbeddingMatrix& matrix, TrainingPair pair,
               std::span<const std::int32_t> negative_ids, double lr) {
    const int v = matrix.vocab().size();
    if (pair.target_id < 0 || pair.target_id >= v || pair.context_id < 0 || pair.context_id >= v)
        throw ConfigError("sgns_step: token id out of range");

    auto t = matrix.target().row(static_cast<std::size_t>(pair.target_id));
    auto c = matrix.context().row(static_cast<std::size_t>(pair.context_id));

    // All gate values come from pre-step vectors; the target delta is
    // accumulated before any table row changes so aliased negative rows
    // still receive exact per-occurrence gradients.
    const double g_pos = sigmoid(dot(c, t)) - 1.0;
    std::vector<double> g_neg(negative_ids.size());
    std::vector<double> t_delta(t.size(), 0.0);
    axpy(g_pos, c, t_delta);
    for (std::size_t i = 0; i < negative_ids.size(); ++i) {
        std::int32_t id = negative_ids[i];
        if (id < 0 || id >= v) throw ConfigError("sgns_step: negative id out of range");
        auto n = matrix.context().row(static_cast<std::size_t>(id));
        g_neg[i] = sigmoid(dot(n, t));
        axpy(g_neg[i], n, t_delta);
    }

    axpy(-lr * g_pos, t, c);
    for (std::size_t i = 0; i < negative_ids.size(); ++i)
        axpy(-lr * g_neg[i], t, matrix.context().row(static_cast<std::size_t>(negative_ids[i])));
    axpy(-lr, t_delta, t);
}

std::vector<std::vector<std::int32_t>> encode_for_sgns(const std::vector<TokenizedNote>& notes,
                                                       const Vocabulary& vocab) {
    std::vector<std::vector<std::int32_t>> out;
    out.reserve(notes.size());
    for (const TokenizedNote& n : notes) out.push_back(vocab.encode(n.tokens));
    return out;
}

namespace {

std::int64_t count_pairs(std::span<const std::int32_t> tokens, int window) {
    std::int64_t count = 0;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(tokens.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (tokens[static_cast<std::size_t>(i)] == Vocabulary::kPadId) continue;
        std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
        std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + window);
        for (std::ptrdiff_t j = lo; j <= hi; ++j)
            if (j != i && tokens[static_cast<std::size_t>(j)] != Vocabulary::kPadId) ++count;
    }
    return count;
}

// Walks one note position by position so each pair sees the exact window
// that produced it; the window contents plus the target form the forbidden
// set for negative sampling.
template <typename LrFn>
void train_over_notes(EmbeddingMatrix& matrix, std::span<const std::vector<std::int32_t>> notes,
                      const SgnsConfig& cfg, const NegativeSampler& sampler, Rng& rng,
                      const LrFn& next_lr) {
    std::vector<std::int32_t> forbidden;
    std::vector<std::int32_t> negatives;
    for (const auto& ids : notes) {
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(ids.size());
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            std::int32_t target = ids[static_cast<std::size_t>(i)];
            if (target == Vocabulary::kPadId) continue;
            std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - cfg.window);
            std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + cfg.window);
            forbidden.clear();
            forbidden.push_back(target);
            for (std::ptrdiff_t j = lo; j <= hi; ++j)
                if (j != i && ids[static_cast<std::size_t>(j)] != Vocabulary::kPadId)
                    forbidden.push_back(ids[static_cast<std::size_t>(j)]);
            for (std::ptrdiff_t j = lo; j <= hi; ++j) {
                if (j == i) continue;
                std::int32_t context = ids[static_cast<std::size_t>(j)];
                if (context == Vocabulary::kPadId) continue;
                negatives.clear();
                sampler.sample(cfg.negatives, forbidden, rng, negatives);
                sgns_step(matrix, TrainingPair{target, context}, negatives, next_lr());
            }
        }
    }
}

}  // namespace

EmbeddingMatrix train_embeddings(const std::vector<std::vector<std::int32_t>>& encoded_notes,
                                 const Vocabulary& vocab, const SgnsConfig& config,
                                 const EpochCallback& on_epoch) {
    config.validate();
    if (encoded_notes.empty()) throw ConfigError("cannot train embeddings on an empty corpus");

    std::int64_t pairs_per_epoch = 0;
    for (const auto& ids : encoded_notes) pairs_per_epoch += count_pairs(ids, config.window);
    if (pairs_per_epoch == 0)
        throw ConfigError("corpus yields no training pairs; notes may be too short");

    EmbeddingMatrix matrix(vocab, config.dim);
    Rng rng(config.seed);
    const double half_range = 0.5 / static_cast<double>(config.dim);
    for (double& x : matrix.target().flat()) x = rng.uniform(-half_range, half_range);

    NegativeSampler sampler(vocab, config.neg_power);
    const std::int64_t total_steps = pairs_per_epoch * config.epochs;
    auto lr_at = [&](std::int64_t step) {
        if (total_steps <= 1) return config.initial_lr;
        double frac = static_cast<double>(step) / static_cast<double>(total_steps - 1);
        return config.initial_lr + (config.final_lr - config.initial_lr) * frac;
    };

    if (config.threads == 1) {
        std::int64_t step = 0;
        for (int epoch = 1; epoch <= config.epochs; ++epoch) {
            train_over_notes(matrix, encoded_notes, config, sampler, rng,
                             [&] { return lr_at(step++); });
            if (on_epoch) on_epoch(epoch, matrix);
        }
        return matrix;
    }

    // Lock-free shared updates: workers race on the tables, which this
    // objective tolerates. Not covered by any reproducibility guarantee.
    std::atomic<std::int64_t> step{0};
    const std::size_t num_threads =
        std::min<std::size_t>(static_cast<std::size_t>(config.threads), encoded_notes.size());
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::vector<std::thread> workers;
        std::size_t chunk = (encoded_notes.size() + num_threads - 1) / num_threads;
        for (std::size_t w = 0; w < num_threads; ++w) {
            std::size_t begin = w * chunk;
            std::size_t end = std::min(encoded_notes.size(), begin + chunk);
            if (begin >= end) break;
            workers.emplace_back([&, w, begin, end] {
                Rng worker_rng(config.seed + 0x9E3779B97F4A7C15ULL * (w + 1) +
                               static_cast<std::uint64_t>(epoch));
                std::span<const std::vector<std::int32_t>> slice(encoded_notes.data() + begin,
                                                                 end - begin);
                train_over_notes(matrix, slice, config, sampler, worker_rng, [&] {
                    return lr_at(step.fetch_add(1, std::memory_order_relaxed));
                });
            });
        }
        for (auto& t : workers) t.join();
        if (on_epoch) on_epoch(epoch, matrix);
    }
    return matrix;
}

void save_vectors(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const Matrix& table = matrix.target();
    out << table.rows() << ' ' << table.cols() << '\n';
    char buf[64];
    for (std::size_t r = 0; r < table.rows(); ++r) {
        out << matrix.vocab().token_of(static_cast<int>(r));
        for (double v : table.row(r)) {
            std::snprintf(buf, sizeof(buf), " %.17g", v);
            out << buf;
        }
        out << '\n';
    }
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

EmbeddingMatrix load_vectors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header line");
    long long v = 0, d = 0;
    {
        std::istringstream hdr(line);
        std::string extra;
        if (!(hdr >> v >> d) || (hdr >> extra))
            throw ParseError(path.string() + ": header must be 'V D' (line 1)");
    }
    if (v <= 0) throw ParseError(path.string() + ": vocabulary size must be positive (line 1)");
    if (d <= 0) throw ParseError(path.string() + ": dimension must be positive (line 1)");

    std::vector<std::string> tokens;
    tokens.reserve(static_cast<std::size_t>(v));
    Matrix table(static_cast<std::size_t>(v), static_cast<std::size_t>(d));
    for (long long r = 0; r < v; ++r) {
        const long long line_no = r + 2;
        if (!std::getline(in, line))
            throw ParseError(path.string() + ": expected " + std::to_string(v) +
                             " rows, file ends at line " + std::to_string(line_no - 1));
        const char* p = line.c_str();
        const char* end = p + line.size();
        while (p < end && *p == ' ') ++p;
        const char* tok_start = p;
        while (p < end && *p != ' ') ++p;
        if (p == tok_start)
            throw ParseError(path.string() + ": empty token on line " + std::to_string(line_no));
        tokens.emplace_back(tok_start, p);
        for (long long c = 0; c < d; ++c) {
            char* next = nullptr;
            double val = std::strtod(p, &next);
            if (next == p)
                throw ParseError(path.string() + ": row on line " + std::to_string(line_no) +
                                 " has " + std::to_string(c) + " values, expected " +
                                 std::to_string(d));
            if (!std::isfinite(val))
                throw ParseError(path.string() + ": non-finite value on line " +
                                 std::to_string(line_no));
            table(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = val;
            p = next;
        }
        while (p < end && (*p == ' ' || *p == '\r')) ++p;
        if (p != end)
            throw ParseError(path.string() + ": row on line " + std::to_string(line_no) +
                             " has more than " + std::to_string(d) + " values");
    }

    EmbeddingMatrix matrix(Vocabulary::from_tokens(tokens), static_cast<int>(d));
    matrix.target() = std::move(table);
    return matrix;
}

}  // namespace crmtext
