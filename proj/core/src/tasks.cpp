#include "crmtext/tasks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace crmtext {

void Dataset::validate() const {
    if (num_rows == 0) throw ConfigError("dataset has no rows");
    if (seq_len == 0) throw ConfigError("dataset sequence length must be positive");
    if (ids.size() != num_rows * seq_len) throw ShapeError("dataset id buffer has the wrong size");
    if (labels.size() != num_rows) throw ShapeError("dataset needs one label per row");
    if (label_names.empty()) throw ConfigError("dataset has no label names");
    if (vocab_size < Vocabulary::kNumSpecials) throw ConfigError("dataset vocab_size is invalid");
    for (std::int32_t id : ids)
        if (id < 0 || id >= vocab_size) throw ConfigError("dataset id out of vocabulary range");
    for (int label : labels)
        if (label < 0 || label >= num_classes()) throw ConfigError("dataset label out of range");
}

std::vector<std::int32_t> encode_note(const std::vector<std::string>& tokens,
                                      const Vocabulary& vocab, int n) {
    if (n < 1) throw ConfigError("input length must be >= 1");
    std::vector<std::int32_t> out(static_cast<std::size_t>(n), Vocabulary::kPadId);
    const std::size_t keep = std::min(tokens.size(), static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < keep; ++i) out[i] = vocab.id_of(tokens[i]);
    return out;
}

Dataset make_lead_dataset(const std::vector<TokenizedNote>& notes, const Vocabulary& vocab,
                          int input_len) {
    Dataset ds;
    ds.seq_len = static_cast<std::size_t>(input_len);
    ds.vocab_size = vocab.size();
    ds.label_names = {"low", "high"};
    for (const TokenizedNote& note : notes) {
        if (note.lead == LeadLabel::none) continue;
        auto row = encode_note(note.tokens, vocab, input_len);
        ds.ids.insert(ds.ids.end(), row.begin(), row.end());
        ds.labels.push_back(note.lead == LeadLabel::high ? 1 : 0);
        ++ds.num_rows;
    }
    if (ds.num_rows == 0) throw ConfigError("no notes carry a lead label");
    return ds;
}

Dataset make_agent_dataset(const std::vector<TokenizedNote>& notes, const Vocabulary& vocab,
                           AgentDatasetOptions options) {
    if (options.min_words < 0) throw ConfigError("min_words must be >= 0");

    std::unordered_map<std::string, std::int64_t> word_counts;
    for (const TokenizedNote& note : notes)
        word_counts[note.agent_id] += static_cast<std::int64_t>(note.tokens.size());

    std::vector<std::pair<std::string, std::int64_t>> qualifying;
    for (const auto& [agent, count] : word_counts)
        if (count >= options.min_words) qualifying.emplace_back(agent, count);
    std::sort(qualifying.begin(), qualifying.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (qualifying.size() < 2)
        throw ConfigError("agent identification needs at least 2 agents above the word threshold, found " +
                          std::to_string(qualifying.size()));

    std::unordered_map<std::string, int> class_of;
    Dataset ds;
    ds.seq_len = static_cast<std::size_t>(options.input_len);
    ds.vocab_size = vocab.size();
    for (std::size_t i = 0; i < qualifying.size(); ++i) {
        ds.label_names.push_back(qualifying[i].first);
        class_of.emplace(qualifying[i].first, static_cast<int>(i));
    }
    for (const TokenizedNote& note : notes) {
        auto it = class_of.find(note.agent_id);
        if (it == class_of.end()) continue;
        auto row = encode_note(note.tokens, vocab, options.input_len);
        ds.ids.insert(ds.ids.end(), row.begin(), row.end());
        ds.labels.push_back(it->second);
        ++ds.num_rows;
    }
    return ds;
}

NextwordData make_nextword_dataset(const std::vector<TokenizedNote>& agent_notes) {
    if (agent_notes.empty()) throw ConfigError("next-word dataset needs a non-empty corpus");
    Vocabulary vocab = Vocabulary::build(agent_notes, /*min_count=*/1);

    NextwordData out{Dataset{}, std::move(vocab)};
    Dataset& ds = out.dataset;
    ds.seq_len = 3;
    ds.vocab_size = out.vocab.size();
    for (int id = 0; id < out.vocab.size(); ++id) ds.label_names.push_back(out.vocab.token_of(id));

    for (const TokenizedNote& note : agent_notes) {
        if (note.tokens.size() < 4) continue;
        auto ids = out.vocab.encode(note.tokens);
        for (std::size_t i = 0; i + 3 < ids.size(); ++i) {
            ds.ids.insert(ds.ids.end(), {ids[i], ids[i + 1], ids[i + 2]});
            ds.labels.push_back(ids[i + 3]);
            ++ds.num_rows;
        }
    }
    if (ds.num_rows == 0) throw ConfigError("no note provides a window of 4 consecutive tokens");
    return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double fraction,
                                          std::uint64_t seed) {
    dataset.validate();
    if (dataset.num_rows < 2) throw ConfigError("cannot split fewer than 2 rows");
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");

    const auto n_train = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(dataset.num_rows)));
    if (n_train == 0 || n_train == dataset.num_rows)
        throw ConfigError("split is degenerate: one side would be empty");

    std::vector<std::size_t> order(dataset.num_rows);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    auto take = [&](std::size_t begin, std::size_t end) {
        Dataset part;
        part.seq_len = dataset.seq_len;
        part.vocab_size = dataset.vocab_size;
        part.label_names = dataset.label_names;
        part.num_rows = end - begin;
        part.ids.reserve(part.num_rows * part.seq_len);
        part.labels.reserve(part.num_rows);
        for (std::size_t i = begin; i < end; ++i) {
            auto row = dataset.row(order[i]);
            part.ids.insert(part.ids.end(), row.begin(), row.end());
            part.labels.push_back(dataset.labels[order[i]]);
        }
        return part;
    };
    return {take(0, n_train), take(n_train, dataset.num_rows)};
}

std::size_t early_stop_epoch(std::span<const double> val_losses) {
    if (val_losses.empty()) throw ConfigError("early_stop_epoch: empty loss series");
    return static_cast<std::size_t>(
        std::min_element(val_losses.begin(), val_losses.end()) - val_losses.begin());
}

void TrainConfig::validate() const {
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        throw ConfigError("split fraction must lie in (0, 1)");
    if (stop == StopMode::patience && patience < 1)
        throw ConfigError("patience mode needs patience >= 1");
}

std::string TrainReport::to_csv() const {
    std::string out = "epoch,train_loss,val_loss,train_acc,val_acc\n";
    char buf[160];
    for (std::size_t e = 0; e < val_loss.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g\n", e + 1, train_loss[e],
                      val_loss[e], train_acc[e], val_acc[e]);
        out += buf;
    }
    return out;
}

namespace {

Batch make_batch(const Dataset& ds, std::span<const std::size_t> rows) {
    Batch batch;
    batch.num_rows = rows.size();
    batch.seq_len = ds.seq_len;
    batch.ids.reserve(rows.size() * ds.seq_len);
    batch.labels.reserve(rows.size());
    for (std::size_t r : rows) {
        auto row = ds.row(r);
        batch.ids.insert(batch.ids.end(), row.begin(), row.end());
        batch.labels.push_back(ds.labels[r]);
    }
    return batch;
}

struct EvalStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

EvalStats eval_dataset(const ClassifierModel& model, const Dataset& ds) {
    EvalStats stats;
    std::size_t correct = 0;
    for (std::size_t r = 0; r < ds.num_rows; ++r) {
        auto probs = forward_scores(model, ds.row(r));
        stats.loss += head_loss(model.cfg.head(), probs, ds.labels[r]);
        if (head_prediction(model.cfg.head(), probs) == ds.labels[r]) ++correct;
    }
    stats.loss /= static_cast<double>(ds.num_rows);
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(ds.num_rows);
    return stats;
}

void check_model_matches_dataset(const ModelConfig& cfg, const Dataset& ds) {
    if (cfg.vocab_size != ds.vocab_size)
        throw ConfigError("model vocab_size does not match the dataset");
    const int expected = cfg.head() == HeadType::sigmoid ? 2 : cfg.classes;
    if (ds.num_classes() != expected)
        throw ConfigError("dataset has " + std::to_string(ds.num_classes()) +
                          " classes but the model expects " + std::to_string(expected));
}

}  // namespace

TrainResult train_classifier(const Dataset& dataset, const ModelConfig& model_cfg,
                             const TrainConfig& train_cfg, const Matrix* pretrained_embedding,
                             const EpochLogger& log) {
    dataset.validate();
    train_cfg.validate();
    check_model_matches_dataset(model_cfg, dataset);

    const auto t0 = std::chrono::steady_clock::now();
    auto [train, val] = split_dataset(dataset, train_cfg.split_fraction, train_cfg.seed);

    ClassifierModel model = ClassifierModel::init(model_cfg, pretrained_embedding);
    AdamState adam(model_cfg, train_cfg.adam);
    Rng shuffle_rng(train_cfg.seed + 0x51ED2701ULL);

    std::vector<std::size_t> order(train.num_rows);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    TrainReport& report = result.report;
    double best_val = std::numeric_limits<double>::infinity();
    ParamTensors best_params = model.params;
    std::size_t best_epoch = 0;

    for (int epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t epoch_correct = 0;
        const auto bs = static_cast<std::size_t>(train_cfg.batch_size);
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const std::size_t end = std::min(order.size(), start + bs);
            Batch batch = make_batch(train, std::span(order).subspan(start, end - start));
            BackwardResult res = backward(model, batch);
            if (!std::isfinite(res.loss))
                throw NumericError("training loss is not finite at epoch " + std::to_string(epoch) +
                                   ", batch starting at row " + std::to_string(start));
            adam.step(model.params, res.grads);
            epoch_loss += res.loss * static_cast<double>(batch.num_rows);
            epoch_correct += res.correct;
        }

        const double train_loss = epoch_loss / static_cast<double>(train.num_rows);
        const double train_acc =
            static_cast<double>(epoch_correct) / static_cast<double>(train.num_rows);
        EvalStats vs = eval_dataset(model, val);
        if (!std::isfinite(vs.loss))
            throw NumericError("validation loss is not finite at epoch " + std::to_string(epoch));

        report.train_loss.push_back(train_loss);
        report.val_loss.push_back(vs.loss);
        report.train_acc.push_back(train_acc);
        report.val_acc.push_back(vs.accuracy);
        if (log) log(epoch, train_loss, vs.loss, train_acc, vs.accuracy);

        if (vs.loss < best_val) {
            best_val = vs.loss;
            best_epoch = static_cast<std::size_t>(epoch - 1);
            best_params = model.params;
        }
        if (train_cfg.stop == StopMode::patience &&
            static_cast<std::size_t>(epoch - 1) - best_epoch >= static_cast<std::size_t>(train_cfg.patience))
            break;
    }

    model.params = std::move(best_params);
    report.best_epoch = best_epoch;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.model = std::move(model);
    return result;
}

Metrics evaluate(const ClassifierModel& model, const Dataset& dataset) {
    dataset.validate();
    check_model_matches_dataset(model.cfg, dataset);

    const auto m = static_cast<std::size_t>(dataset.num_classes());
    std::vector<std::int64_t> counts(m * m, 0);
    std::int64_t hits = 0;
    for (std::size_t r = 0; r < dataset.num_rows; ++r) {
        auto probs = forward_scores(model, dataset.row(r));
        const int pred = head_prediction(model.cfg.head(), probs);
        const int truth = dataset.labels[r];
        ++counts[static_cast<std::size_t>(truth) * m + static_cast<std::size_t>(pred)];
        if (pred == truth) ++hits;
    }

    Metrics metrics;
    metrics.accuracy = static_cast<double>(hits) / static_cast<double>(dataset.num_rows);
    metrics.confusion = Matrix(m, m);
    metrics.per_class.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::int64_t row_total = 0, col_total = 0;
        for (std::size_t j = 0; j < m; ++j) {
            row_total += counts[i * m + j];
            col_total += counts[j * m + i];
        }
        const std::int64_t tp = counts[i * m + i];
        ClassMetrics& cm = metrics.per_class[i];
        cm.support = row_total;
        cm.zero_support = row_total == 0;
        const std::int64_t fp = col_total - tp;
        const std::int64_t fn = row_total - tp;
        cm.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        cm.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        cm.f1 = (cm.precision + cm.recall) > 0.0
                    ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall)
                    : 0.0;
        if (row_total > 0)
            for (std::size_t j = 0; j < m; ++j)
                metrics.confusion(i, j) =
                    static_cast<double>(counts[i * m + j]) / static_cast<double>(row_total);
    }
    return metrics;
}

std::string Metrics::to_report(const std::vector<std::string>& label_names) const {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof(buf), "accuracy=%.9g\n", accuracy);
    out += buf;
    out += "classes=" + std::to_string(per_class.size()) + "\n";
    for (std::size_t i = 0; i < per_class.size(); ++i) {
        const ClassMetrics& cm = per_class[i];
        const std::string name = i < label_names.size() ? label_names[i] : std::to_string(i);
        std::snprintf(buf, sizeof(buf),
                      "class.%zu.name=%s\nclass.%zu.precision=%.9g\nclass.%zu.recall=%.9g\n"
                      "class.%zu.f1=%.9g\nclass.%zu.support=%lld\nclass.%zu.zero_support=%d\n",
                      i, name.c_str(), i, cm.precision, i, cm.recall, i, cm.f1, i,
                      static_cast<long long>(cm.support), i, cm.zero_support ? 1 : 0);
        out += buf;
    }
    return out;
}

std::string Metrics::confusion_csv(const std::vector<std::string>& label_names) const {
    std::string out = "true\\pred";
    auto name_of = [&](std::size_t i) {
        return i < label_names.size() ? label_names[i] : std::to_string(i);
    };
    for (std::size_t j = 0; j < confusion.cols(); ++j) out += "," + name_of(j);
    out += "\n";
    char buf[48];
    for (std::size_t i = 0; i < confusion.rows(); ++i) {
        out += name_of(i);
        for (std::size_t j = 0; j < confusion.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), ",%.9g", confusion(i, j));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

namespace {

// Full class distribution regardless of head type; the sigmoid head expands
// to {1-p, p}.
std::vector<double> class_distribution(const ClassifierModel& model,
                                       std::span<const std::int32_t> ids) {
    auto probs = forward_scores(model, ids);
    if (model.cfg.head() == HeadType::sigmoid) return {1.0 - probs[0], probs[0]};
    return probs;
}

// True when `label` is among the k most probable classes, ranking by
// probability with lower class id winning ties.
bool label_in_topk(std::span<const double> probs, int label, int k) {
    const double p = probs[static_cast<std::size_t>(label)];
    int ahead = 0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        const auto jl = static_cast<int>(j);
        if (probs[j] > p || (probs[j] == p && jl < label)) ++ahead;
    }
    return ahead < k;
}

}  // namespace

double topk_accuracy(const ClassifierModel& model, const Dataset& dataset, int k) {
    dataset.validate();
    check_model_matches_dataset(model.cfg, dataset);
    if (k < 1) throw ConfigError("topk must be >= 1");
    k = std::min(k, dataset.num_classes());

    std::size_t hits = 0;
    for (std::size_t r = 0; r < dataset.num_rows; ++r) {
        auto probs = class_distribution(model, dataset.row(r));
        if (label_in_topk(probs, dataset.labels[r], k)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(dataset.num_rows);
}

std::vector<Prediction> predict_next(const ClassifierModel& model, const Vocabulary& vocab,
                                     const std::vector<std::string>& words, int topk) {
    if (model.cfg.head() != HeadType::softmax || model.cfg.classes != vocab.size())
        throw ConfigError("model is not a next-word predictor over this vocabulary");
    if (words.size() != 3) throw ConfigError("next-word prediction takes exactly 3 words");
    if (topk < 1) throw ConfigError("topk must be >= 1");
    if (topk > model.cfg.classes)
        throw ConfigError("topk " + std::to_string(topk) + " exceeds the " +
                          std::to_string(model.cfg.classes) + " candidate classes");

    auto ids = vocab.encode(words);
    auto probs = forward_scores(model, ids);

    std::vector<int> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + topk, order.end(), [&](int a, int b) {
        const double pa = probs[static_cast<std::size_t>(a)];
        const double pb = probs[static_cast<std::size_t>(b)];
        return pa != pb ? pa > pb : a < b;
    });

    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(topk));
    for (int r = 0; r < topk; ++r)
        out.push_back(Prediction{vocab.token_of(order[static_cast<std::size_t>(r)]),
                                 probs[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])]});
    return out;
}

Matrix remap_embeddings(const EmbeddingMatrix& pretrained, const Vocabulary& vocab, Rng& rng) {
    const auto dim = static_cast<std::size_t>(pretrained.dim());
    Matrix table(static_cast<std::size_t>(vocab.size()), dim);
    const double half_range = 0.5 / static_cast<double>(dim);
    for (int id = 0; id < vocab.size(); ++id) {
        auto dst = table.row(static_cast<std::size_t>(id));
        if (id == Vocabulary::kPadId) continue;  // stays zero
        const std::string& token = vocab.token_of(id);
        if (pretrained.vocab().contains(token)) {
            auto src = pretrained.vector_of(pretrained.vocab().id_of(token));
            std::copy(src.begin(), src.end(), dst.begin());
        } else {
            for (double& v : dst) v = rng.uniform(-half_range, half_range);
        }
    }
    return table;
}

}  // namespace crmtext
