#include "crmtext/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "crmtext/embeddings.hpp"  // sigmoid

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace crmtext {

LstmParams::LstmParams(int input_dim, int hidden_dim) {
    if (input_dim <= 0 || hidden_dim <= 0) throw ConfigError("LSTM dims must be positive");
    for (int g = 0; g < kNumGates; ++g) {
        auto gi = static_cast<std::size_t>(g);
        wx[gi] = Matrix(static_cast<std::size_t>(hidden_dim), static_cast<std::size_t>(input_dim));
        wh[gi] = Matrix(static_cast<std::size_t>(hidden_dim), static_cast<std::size_t>(hidden_dim));
        b[gi] = Matrix::column(static_cast<std::size_t>(hidden_dim));
    }
}

void ModelConfig::validate() const {
    if (vocab_size < 2) throw ConfigError("vocab_size must cover at least the PAD/UNK entries");
    if (embed_dim <= 0) throw ConfigError("embed_dim must be positive");
    if (hidden <= 0) throw ConfigError("hidden must be positive");
    if (dense <= 0) throw ConfigError("dense must be positive");
    if (classes < 1) throw ConfigError("classes must be >= 1");
}

ParamTensors ParamTensors::shaped(const ModelConfig& cfg) {
    cfg.validate();
    ParamTensors p;
    p.embedding = Matrix(static_cast<std::size_t>(cfg.vocab_size),
                         static_cast<std::size_t>(cfg.embed_dim));
    p.fwd = LstmParams(cfg.embed_dim, cfg.hidden);
    p.bwd = LstmParams(cfg.embed_dim, cfg.hidden);
    p.dense_w = Matrix(static_cast<std::size_t>(cfg.dense), 2 * static_cast<std::size_t>(cfg.hidden));
    p.dense_b = Matrix::column(static_cast<std::size_t>(cfg.dense));
    p.head_w = Matrix(static_cast<std::size_t>(cfg.head_rows()), static_cast<std::size_t>(cfg.dense));
    p.head_b = Matrix::column(static_cast<std::size_t>(cfg.head_rows()));
    return p;
}

std::vector<Matrix*> ParamTensors::tensors() {
    std::vector<Matrix*> out;
    for_each([&](const std::string&, Matrix& m) { out.push_back(&m); });
    return out;
}

std::vector<const Matrix*> ParamTensors::tensors() const {
    std::vector<const Matrix*> out;
    for_each([&](const std::string&, const Matrix& m) { out.push_back(&m); });
    return out;
}

ClassifierModel ClassifierModel::init(const ModelConfig& cfg, const Matrix* pretrained_embedding) {
    cfg.validate();
    ClassifierModel model;
    model.cfg = cfg;
    model.params = ParamTensors::shaped(cfg);
    Rng rng(cfg.seed);

    auto fill_uniform = [&](Matrix& w) {
        double r = 1.0 / std::sqrt(static_cast<double>(w.cols()));
        for (double& x : w.flat()) x = rng.uniform(-r, r);
    };

    if (pretrained_embedding) {
        if (!pretrained_embedding->same_shape(model.params.embedding))
            throw ConfigError("pretrained embedding shape does not match vocab_size x embed_dim");
        model.params.embedding = *pretrained_embedding;
    } else {
        fill_uniform(model.params.embedding);
    }
    for (double& x : model.params.embedding.row(0)) x = 0.0;  // PAD

    for (LstmParams* dir : {&model.params.fwd, &model.params.bwd}) {
        for (int g = 0; g < kNumGates; ++g) fill_uniform(dir->wx[static_cast<std::size_t>(g)]);
        for (int g = 0; g < kNumGates; ++g) fill_uniform(dir->wh[static_cast<std::size_t>(g)]);
        dir->b[kGateForget].fill(1.0);
    }
    fill_uniform(model.params.dense_w);
    fill_uniform(model.params.head_w);
    return model;
}

// --- kernels ----------------------------------------------------------------

Matrix embed_lookup(const Matrix& table, std::span<const std::int32_t> ids) {
    Matrix out(ids.size(), table.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        std::int32_t id = ids[r];
        if (id < 0 || static_cast<std::size_t>(id) >= table.rows())
            throw ConfigError("embedding id " + std::to_string(id) + " out of range");
        auto src = table.row(static_cast<std::size_t>(id));
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

namespace {

struct CellCache {
    std::vector<double> gate_i, gate_f, gate_o, cand, c, tanh_c, h;

    void resize(std::size_t hidden) {
        gate_i.resize(hidden);
        gate_f.resize(hidden);
        gate_o.resize(hidden);
        cand.resize(hidden);
        c.resize(hidden);
        tanh_c.resize(hidden);
        h.resize(hidden);
    }
};

// Pre-activation of one gate: b + wx x + wh h_prev.
void gate_preact(const LstmParams& p, int gate, std::span<const double> x,
                 std::span<const double> h_prev, std::span<double> out) {
    auto gi = static_cast<std::size_t>(gate);
    auto bias = p.b[gi].flat();
    std::copy(bias.begin(), bias.end(), out.begin());
    gemv_acc(p.wx[gi], x, out);
    gemv_acc(p.wh[gi], h_prev, out);
}

void cell_forward(const LstmParams& p, std::span<const double> x, std::span<const double> h_prev,
                  std::span<const double> c_prev, CellCache& cc) {
    const auto hidden = static_cast<std::size_t>(p.hidden_dim());
    cc.resize(hidden);
    gate_preact(p, kGateInput, x, h_prev, cc.gate_i);
    gate_preact(p, kGateForget, x, h_prev, cc.gate_f);
    gate_preact(p, kGateOutput, x, h_prev, cc.gate_o);
    gate_preact(p, kGateCandidate, x, h_prev, cc.cand);
    for (std::size_t j = 0; j < hidden; ++j) {
        cc.gate_i[j] = sigmoid(cc.gate_i[j]);
        cc.gate_f[j] = sigmoid(cc.gate_f[j]);
        cc.gate_o[j] = sigmoid(cc.gate_o[j]);
        cc.cand[j] = std::tanh(cc.cand[j]);
        cc.c[j] = cc.gate_f[j] * c_prev[j] + cc.gate_i[j] * cc.cand[j];
        cc.tanh_c[j] = std::tanh(cc.c[j]);
        cc.h[j] = cc.gate_o[j] * cc.tanh_c[j];
    }
}

}  // namespace

void lstm_cell(const LstmParams& p, std::span<const double> x, std::span<const double> h_prev,
               std::span<const double> c_prev, std::span<double> h_out, std::span<double> c_out) {
    const auto hidden = static_cast<std::size_t>(p.hidden_dim());
    if (x.size() != static_cast<std::size_t>(p.input_dim()) || h_prev.size() != hidden ||
        c_prev.size() != hidden || h_out.size() != hidden || c_out.size() != hidden)
        throw ShapeError("lstm_cell: dimension mismatch");
    CellCache cc;
    cell_forward(p, x, h_prev, c_prev, cc);
    std::copy(cc.h.begin(), cc.h.end(), h_out.begin());
    std::copy(cc.c.begin(), cc.c.end(), c_out.begin());
}

std::vector<double> bilstm_encode(const Matrix& inputs, const LstmParams& fwd,
                                  const LstmParams& bwd) {
    const std::size_t n = inputs.rows();
    if (n == 0) throw ConfigError("bilstm_encode: empty sequence");
    if (inputs.cols() != static_cast<std::size_t>(fwd.input_dim()) ||
        inputs.cols() != static_cast<std::size_t>(bwd.input_dim()) ||
        fwd.hidden_dim() != bwd.hidden_dim())
        throw ShapeError("bilstm_encode: dimension mismatch");

    const auto hidden = static_cast<std::size_t>(fwd.hidden_dim());
    std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
    CellCache cc;
    std::vector<double> out(2 * hidden);
    for (std::size_t t = 0; t < n; ++t) {
        cell_forward(fwd, inputs.row(t), h, c, cc);
        h = cc.h;
        c = cc.c;
    }
    std::copy(h.begin(), h.end(), out.begin());

    std::fill(h.begin(), h.end(), 0.0);
    std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t t = n; t-- > 0;) {
        cell_forward(bwd, inputs.row(t), h, c, cc);
        h = cc.h;
        c = cc.c;
    }
    std::copy(h.begin(), h.end(), out.begin() + static_cast<std::ptrdiff_t>(hidden));
    return out;
}

std::vector<double> dense_relu(std::span<const double> x, const Matrix& w, const Matrix& b) {
    if (w.cols() != x.size() || w.rows() != b.size())
        throw ShapeError("dense_relu: dimension mismatch");
    std::vector<double> out(b.flat().begin(), b.flat().end());
    gemv_acc(w, x, out);
    for (double& v : out) v = v < 0.0 ? 0.0 : v;  // keeps NaN propagating
    return out;
}

double sigmoid_head(std::span<const double> x, const Matrix& w, const Matrix& b) {
    if (w.rows() != 1 || w.cols() != x.size() || b.size() != 1)
        throw ShapeError("sigmoid_head: dimension mismatch");
    return sigmoid(dot(w.row(0), x) + b[0]);
}

std::vector<double> softmax(std::span<const double> logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

std::vector<double> softmax_head(std::span<const double> x, const Matrix& w, const Matrix& b) {
    if (w.rows() < 2) throw ShapeError("softmax_head: needs at least two classes");
    if (w.cols() != x.size() || b.size() != w.rows())
        throw ShapeError("softmax_head: dimension mismatch");
    std::vector<double> logits(b.flat().begin(), b.flat().end());
    gemv_acc(w, x, logits);
    return softmax(logits);
}

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

}  // namespace

double bce_loss(std::span<const double> labels, std::span<const double> probs) {
    if (labels.size() != probs.size()) throw ShapeError("bce_loss: length mismatch");
    if (labels.empty()) throw ShapeError("bce_loss: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        double p = clamp_prob(probs[i]);
        total += labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
    }
    return -total / static_cast<double>(labels.size());
}

double cce_loss(const Matrix& onehot, const Matrix& probs) {
    if (!onehot.same_shape(probs)) throw ShapeError("cce_loss: shape mismatch");
    if (onehot.rows() == 0) throw ShapeError("cce_loss: empty batch");
    double total = 0.0;
    for (std::size_t r = 0; r < onehot.rows(); ++r)
        for (std::size_t c = 0; c < onehot.cols(); ++c)
            if (onehot(r, c) != 0.0) total += onehot(r, c) * std::log(clamp_prob(probs(r, c)));
    return -total / static_cast<double>(onehot.rows());
}

// --- forward/backward ---------------------------------------------------------

void Batch::validate(const ModelConfig& cfg) const {
    if (num_rows == 0 || seq_len == 0) throw ConfigError("batch must be non-empty");
    if (ids.size() != num_rows * seq_len) throw ShapeError("batch id buffer has the wrong size");
    if (labels.size() != num_rows) throw ShapeError("batch has one label per row");
    for (std::int32_t id : ids)
        if (id < 0 || id >= cfg.vocab_size) throw ConfigError("batch id out of vocabulary range");
    const int max_label = cfg.head() == HeadType::sigmoid ? 2 : cfg.classes;
    for (int label : labels)
        if (label < 0 || label >= max_label) throw ConfigError("batch label out of range");
}

namespace {

struct SeqCache {
    Matrix x;  // n x embed
    std::vector<CellCache> fwd, bwd;
    std::vector<double> encoded;    // 2H
    std::vector<double> dense_pre;  // before ReLU
    std::vector<double> dense_out;
    std::vector<double> probs;  // size 1 (sigmoid) or classes (softmax)
};

void forward_cached(const ClassifierModel& model, std::span<const std::int32_t> ids,
                    SeqCache& cache) {
    const ParamTensors& p = model.params;
    const auto hidden = static_cast<std::size_t>(model.cfg.hidden);
    const std::size_t n = ids.size();
    if (n == 0) throw ConfigError("empty sequence");

    cache.x = embed_lookup(p.embedding, ids);
    cache.fwd.resize(n);
    cache.bwd.resize(n);

    std::vector<double> zeros(hidden, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        auto h_prev = s == 0 ? std::span<const double>(zeros) : std::span<const double>(cache.fwd[s - 1].h);
        auto c_prev = s == 0 ? std::span<const double>(zeros) : std::span<const double>(cache.fwd[s - 1].c);
        cell_forward(p.fwd, cache.x.row(s), h_prev, c_prev, cache.fwd[s]);
    }
    for (std::size_t s = 0; s < n; ++s) {
        auto h_prev = s == 0 ? std::span<const double>(zeros) : std::span<const double>(cache.bwd[s - 1].h);
        auto c_prev = s == 0 ? std::span<const double>(zeros) : std::span<const double>(cache.bwd[s - 1].c);
        cell_forward(p.bwd, cache.x.row(n - 1 - s), h_prev, c_prev, cache.bwd[s]);
    }

    cache.encoded.resize(2 * hidden);
    std::copy(cache.fwd[n - 1].h.begin(), cache.fwd[n - 1].h.end(), cache.encoded.begin());
    std::copy(cache.bwd[n - 1].h.begin(), cache.bwd[n - 1].h.end(),
              cache.encoded.begin() + static_cast<std::ptrdiff_t>(hidden));

    cache.dense_pre.assign(p.dense_b.flat().begin(), p.dense_b.flat().end());
    gemv_acc(p.dense_w, cache.encoded, cache.dense_pre);
    cache.dense_out = cache.dense_pre;
    for (double& v : cache.dense_out) v = v < 0.0 ? 0.0 : v;

    if (model.cfg.head() == HeadType::sigmoid) {
        cache.probs.assign(1, sigmoid_head(cache.dense_out, p.head_w, p.head_b));
    } else {
        cache.probs = softmax_head(cache.dense_out, p.head_w, p.head_b);
    }
}

// Backpropagation through one direction of the recurrence. Caches are in
// time order; for the reversed direction time step s reads input position
// n-1-s. dh_final seeds the gradient of that direction's last hidden state.
void bptt_direction(const LstmParams& p, LstmParams& grad, const std::vector<CellCache>& cache,
                    const Matrix& x, bool reversed, std::span<const double> dh_final, Matrix& dx) {
    const auto hidden = static_cast<std::size_t>(p.hidden_dim());
    const std::size_t n = cache.size();
    std::vector<double> zeros(hidden, 0.0);
    std::vector<double> dh(dh_final.begin(), dh_final.end());
    std::vector<double> dc(hidden, 0.0);
    std::array<std::vector<double>, kNumGates> da;
    for (auto& v : da) v.resize(hidden);
    std::vector<double> dh_prev(hidden);

    for (std::size_t s = n; s-- > 0;) {
        const CellCache& cc = cache[s];
        std::span<const double> h_prev = s == 0 ? std::span<const double>(zeros) : cache[s - 1].h;
        std::span<const double> c_prev = s == 0 ? std::span<const double>(zeros) : cache[s - 1].c;
        const std::size_t xi = reversed ? n - 1 - s : s;

        for (std::size_t j = 0; j < hidden; ++j) {
            const double d_o = dh[j] * cc.tanh_c[j];
            const double d_ct = dh[j] * cc.gate_o[j] * (1.0 - cc.tanh_c[j] * cc.tanh_c[j]) + dc[j];
            da[kGateInput][j] = d_ct * cc.cand[j] * cc.gate_i[j] * (1.0 - cc.gate_i[j]);
            da[kGateForget][j] = d_ct * c_prev[j] * cc.gate_f[j] * (1.0 - cc.gate_f[j]);
            da[kGateOutput][j] = d_o * cc.gate_o[j] * (1.0 - cc.gate_o[j]);
            da[kGateCandidate][j] = d_ct * cc.gate_i[j] * (1.0 - cc.cand[j] * cc.cand[j]);
            dc[j] = d_ct * cc.gate_f[j];
        }

        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (int g = 0; g < kNumGates; ++g) {
            auto gi = static_cast<std::size_t>(g);
            outer_acc(grad.wx[gi], da[gi], x.row(xi));
            outer_acc(grad.wh[gi], da[gi], h_prev);
            axpy(1.0, da[gi], grad.b[gi].flat());
            gemv_t_acc(p.wx[gi], da[gi], dx.row(xi));
            gemv_t_acc(p.wh[gi], da[gi], dh_prev);
        }
        dh = dh_prev;
    }
}

}  // namespace

std::vector<double> forward_scores(const ClassifierModel& model, std::span<const std::int32_t> ids) {
    SeqCache cache;
    forward_cached(model, ids, cache);
    return cache.probs;
}

double head_loss(HeadType head, std::span<const double> probs, int label) {
    if (head == HeadType::sigmoid) {
        double p = clamp_prob(probs[0]);
        return -(label == 1 ? std::log(p) : std::log(1.0 - p));
    }
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
        throw ConfigError("head_loss: label out of range");
    return -std::log(clamp_prob(probs[static_cast<std::size_t>(label)]));
}

int head_prediction(HeadType head, std::span<const double> probs) {
    if (head == HeadType::sigmoid) return probs[0] >= 0.5 ? 1 : 0;
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double batch_loss(const ClassifierModel& model, const Batch& batch) {
    batch.validate(model.cfg);
    SeqCache cache;
    double total = 0.0;
    for (std::size_t r = 0; r < batch.num_rows; ++r) {
        forward_cached(model, batch.row(r), cache);
        total += head_loss(model.cfg.head(), cache.probs, batch.labels[r]);
    }
    return total / static_cast<double>(batch.num_rows);
}

BackwardResult backward(const ClassifierModel& model, const Batch& batch) {
    batch.validate(model.cfg);
    const ModelConfig& cfg = model.cfg;
    const ParamTensors& p = model.params;
    const auto hidden = static_cast<std::size_t>(cfg.hidden);
    const double inv_n = 1.0 / static_cast<double>(batch.num_rows);

    BackwardResult result;
    result.grads = ParamTensors::shaped(cfg);

    SeqCache cache;
    std::vector<double> dz;
    std::vector<double> ddense(static_cast<std::size_t>(cfg.dense));
    std::vector<double> du(2 * hidden);
    Matrix dx(batch.seq_len, static_cast<std::size_t>(cfg.embed_dim));

    for (std::size_t r = 0; r < batch.num_rows; ++r) {
        auto ids = batch.row(r);
        forward_cached(model, ids, cache);
        const int label = batch.labels[r];

        result.loss += head_loss(cfg.head(), cache.probs, label) * inv_n;
        if (head_prediction(cfg.head(), cache.probs) == label) ++result.correct;

        // Head: d(loss)/d(logit) = (p - y) / N for both heads.
        dz.assign(cache.probs.begin(), cache.probs.end());
        if (cfg.head() == HeadType::sigmoid) {
            dz[0] = (dz[0] - static_cast<double>(label)) * inv_n;
        } else {
            for (double& v : dz) v *= inv_n;
            dz[static_cast<std::size_t>(label)] -= inv_n;
        }
        outer_acc(result.grads.head_w, dz, cache.dense_out);
        axpy(1.0, dz, result.grads.head_b.flat());

        std::fill(ddense.begin(), ddense.end(), 0.0);
        gemv_t_acc(p.head_w, dz, ddense);
        for (std::size_t j = 0; j < ddense.size(); ++j)
            if (cache.dense_pre[j] <= 0.0) ddense[j] = 0.0;  // ReLU subgradient at 0 is 0

        outer_acc(result.grads.dense_w, ddense, cache.encoded);
        axpy(1.0, ddense, result.grads.dense_b.flat());
        std::fill(du.begin(), du.end(), 0.0);
        gemv_t_acc(p.dense_w, ddense, du);

        dx.fill(0.0);
        std::span<const double> du_span(du);
        bptt_direction(p.fwd, result.grads.fwd, cache.fwd, cache.x, false,
                       du_span.subspan(0, hidden), dx);
        bptt_direction(p.bwd, result.grads.bwd, cache.bwd, cache.x, true,
                       du_span.subspan(hidden, hidden), dx);

        if (cfg.train_embedding) {
            for (std::size_t t = 0; t < ids.size(); ++t)
                axpy(1.0, dx.row(t),
                     result.grads.embedding.row(static_cast<std::size_t>(ids[t])));
        }
    }

    // The PAD row is pinned: it never receives updates even when trainable.
    for (double& v : result.grads.embedding.row(0)) v = 0.0;
    return result;
}

// --- Adam ---------------------------------------------------------------------

AdamState::AdamState(const ModelConfig& shape, AdamConfig cfg)
    : cfg_(cfg), m_(ParamTensors::shaped(shape)), v_(ParamTensors::shaped(shape)) {}

void AdamState::step(ParamTensors& params, const Gradients& grads) {
    auto ps = params.tensors();
    auto gs = grads.tensors();
    auto ms = m_.tensors();
    auto vs = v_.tensors();
    for (std::size_t t = 0; t < ps.size(); ++t)
        if (!ps[t]->same_shape(*gs[t]) || !ps[t]->same_shape(*ms[t]))
            throw ShapeError("adam step: tensor shape mismatch");

    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (std::size_t t = 0; t < ps.size(); ++t) {
        auto pf = ps[t]->flat();
        auto gf = gs[t]->flat();
        auto mf = ms[t]->flat();
        auto vf = vs[t]->flat();
        for (std::size_t i = 0; i < pf.size(); ++i) {
            mf[i] = cfg_.beta1 * mf[i] + (1.0 - cfg_.beta1) * gf[i];
            vf[i] = cfg_.beta2 * vf[i] + (1.0 - cfg_.beta2) * gf[i] * gf[i];
            pf[i] -= cfg_.lr * (mf[i] / bc1) / (std::sqrt(vf[i] / bc2) + cfg_.eps);
        }
    }
}

// --- gradient verification -----------------------------------------------------

std::string GradCheckReport::to_string() const {
    std::ostringstream out;
    for (const Group& g : groups) {
        out << g.name << " max_rel_err=" << g.max_rel_err << '\n';
    }
    out << "overall max_rel_err=" << max_rel_err << " tolerance=" << tolerance << ' '
        << (passed ? "PASS" : "FAIL") << '\n';
    return out.str();
}

GradCheckReport grad_check(const ClassifierModel& model, const Batch& batch, double tolerance,
                           double h, const GradientMutator& mutate) {
    Gradients analytic = backward(model, batch).grads;
    if (mutate) mutate(analytic);

    std::vector<std::pair<std::string, const Matrix*>> named;
    analytic.for_each([&](const std::string& name, const Matrix& m) { named.emplace_back(name, &m); });

    ClassifierModel work = model;
    std::vector<Matrix*> work_tensors = work.params.tensors();

    GradCheckReport report;
    report.tolerance = tolerance;
    for (std::size_t t = 0; t < named.size(); ++t) {
        const auto& [name, grad] = named[t];
        if (name == "embedding" && !model.cfg.train_embedding) continue;
        Matrix& param = *work_tensors[t];
        GradCheckReport::Group group{name, 0.0};
        for (std::size_t i = 0; i < param.size(); ++i) {
            // The PAD embedding row is pinned, not a free parameter.
            if (name == "embedding" && i < param.cols()) continue;
            const double orig = param[i];
            param[i] = orig + h;
            const double lp = batch_loss(work, batch);
            param[i] = orig - h;
            const double lm = batch_loss(work, batch);
            param[i] = orig;
            const double numeric = (lp - lm) / (2.0 * h);
            const double a = (*grad)[i];
            const double err =
                std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-6});
            group.max_rel_err = std::max(group.max_rel_err, err);
        }
        report.max_rel_err = std::max(report.max_rel_err, group.max_rel_err);
        report.groups.push_back(std::move(group));
    }
    report.passed = report.max_rel_err < tolerance;
    return report;
}

GradCheckReport grad_check_random(std::uint64_t seed, HeadType head, double tolerance, double h,
                                  const GradientMutator& mutate) {
    ModelConfig cfg;
    cfg.vocab_size = 10;
    cfg.embed_dim = 4;
    cfg.hidden = 3;
    cfg.dense = 8;
    cfg.classes = head == HeadType::sigmoid ? 1 : 3;
    cfg.train_embedding = true;
    cfg.seed = seed;
    ClassifierModel model = ClassifierModel::init(cfg);

    Rng rng(seed ^ 0xC0FFEE123456789AULL);
    Batch batch;
    batch.num_rows = 2;
    batch.seq_len = 5;
    batch.ids.resize(batch.num_rows * batch.seq_len);
    for (auto& id : batch.ids)
        id = static_cast<std::int32_t>(rng.uniform_index(static_cast<std::size_t>(cfg.vocab_size)));
    const int label_space = head == HeadType::sigmoid ? 2 : cfg.classes;
    batch.labels.resize(batch.num_rows);
    for (auto& label : batch.labels)
        label = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(label_space)));
    return grad_check(model, batch, tolerance, h, mutate);
}

// --- persistence ----------------------------------------------------------------

namespace {

constexpr const char* kCheckpointFormat = "crmtext-checkpoint";
constexpr const char* kCheckpointVersion = "1";
constexpr const char* kCheckpointDtype = "float32-le";

std::string head_name(HeadType head) { return head == HeadType::sigmoid ? "sigmoid" : "softmax"; }

long long parse_int(const std::map<std::string, std::string>& kv, const std::string& key,
                    const std::string& file) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(file + ": missing key '" + key + "'");
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw ParseError(file + ": key '" + key + "' is not an integer");
    }
}

std::string require(const std::map<std::string, std::string>& kv, const std::string& key,
                    const std::string& file) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(file + ": missing key '" + key + "'");
    return it->second;
}

}  // namespace

void save_checkpoint(const ClassifierModel& model, const std::string& prefix,
                     const std::vector<std::pair<std::string, std::string>>& extra) {
    const std::string manifest_path = prefix + ".manifest";
    const std::string params_path = prefix + ".params";
    const ModelConfig& cfg = model.cfg;

    std::ostringstream manifest;
    manifest << "format: " << kCheckpointFormat << '\n';
    manifest << "version: " << kCheckpointVersion << '\n';
    manifest << "head: " << head_name(cfg.head()) << '\n';
    manifest << "vocab_size: " << cfg.vocab_size << '\n';
    manifest << "embed_dim: " << cfg.embed_dim << '\n';
    manifest << "hidden: " << cfg.hidden << '\n';
    manifest << "dense: " << cfg.dense << '\n';
    manifest << "classes: " << cfg.classes << '\n';
    manifest << "train_embedding: " << (cfg.train_embedding ? 1 : 0) << '\n';
    manifest << "seed: " << cfg.seed << '\n';
    manifest << "dtype: " << kCheckpointDtype << '\n';
    model.params.for_each([&](const std::string& name, const Matrix& m) {
        manifest << "tensor: " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    });
    for (const auto& [key, value] : extra) {
        if (key.find_first_of("\n:") != std::string::npos ||
            value.find('\n') != std::string::npos)
            throw ConfigError("checkpoint extra entries must be single-line and colon-free keys");
        manifest << "extra." << key << ": " << value << '\n';
    }

    std::ofstream mout(manifest_path, std::ios::binary);
    if (!mout) throw IoError("cannot open " + manifest_path + " for writing");
    mout << manifest.str();
    mout.flush();
    if (!mout) throw IoError("failed writing " + manifest_path);

    std::ofstream pout(params_path, std::ios::binary);
    if (!pout) throw IoError("cannot open " + params_path + " for writing");
    std::vector<float> buffer;
    model.params.for_each([&](const std::string&, const Matrix& m) {
        buffer.resize(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) buffer[i] = static_cast<float>(m[i]);
        pout.write(reinterpret_cast<const char*>(buffer.data()),
                   static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    });
    pout.flush();
    if (!pout) throw IoError("failed writing " + params_path);
}

Checkpoint load_checkpoint(const std::string& prefix) {
    const std::string manifest_path = prefix + ".manifest";
    const std::string params_path = prefix + ".params";

    std::ifstream min(manifest_path, std::ios::binary);
    if (!min) throw IoError("cannot open " + manifest_path);

    std::map<std::string, std::string> kv;
    std::vector<std::string> tensor_lines;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(min, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto colon = line.find(": ");
        if (colon == std::string::npos)
            throw ParseError(manifest_path + ": malformed line " + std::to_string(line_no));
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 2);
        if (key == "tensor") {
            tensor_lines.push_back(value);
        } else if (!kv.emplace(key, value).second) {
            throw ParseError(manifest_path + ": duplicate key '" + key + "'");
        }
    }

    if (require(kv, "format", manifest_path) != kCheckpointFormat)
        throw ParseError(manifest_path + ": not a checkpoint manifest");
    if (require(kv, "version", manifest_path) != kCheckpointVersion)
        throw ParseError(manifest_path + ": unsupported version");
    if (require(kv, "dtype", manifest_path) != kCheckpointDtype)
        throw ParseError(manifest_path + ": unsupported dtype");

    ModelConfig cfg;
    cfg.vocab_size = static_cast<int>(parse_int(kv, "vocab_size", manifest_path));
    cfg.embed_dim = static_cast<int>(parse_int(kv, "embed_dim", manifest_path));
    cfg.hidden = static_cast<int>(parse_int(kv, "hidden", manifest_path));
    cfg.dense = static_cast<int>(parse_int(kv, "dense", manifest_path));
    cfg.classes = static_cast<int>(parse_int(kv, "classes", manifest_path));
    cfg.train_embedding = parse_int(kv, "train_embedding", manifest_path) != 0;
    cfg.seed = static_cast<std::uint64_t>(parse_int(kv, "seed", manifest_path));
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ParseError(manifest_path + ": " + e.what());
    }
    if (require(kv, "head", manifest_path) != head_name(cfg.head()))
        throw ParseError(manifest_path + ": head does not match the class count");

    Checkpoint ckpt;
    ckpt.model.cfg = cfg;
    ckpt.model.params = ParamTensors::shaped(cfg);

    std::size_t expected_index = 0;
    std::size_t total_values = 0;
    ckpt.model.params.for_each([&](const std::string& name, const Matrix& m) {
        if (expected_index >= tensor_lines.size())
            throw ParseError(manifest_path + ": missing tensor entry for " + name);
        std::istringstream ts(tensor_lines[expected_index]);
        std::string tname;
        std::size_t rows = 0, cols = 0;
        if (!(ts >> tname >> rows >> cols) || tname != name || rows != m.rows() || cols != m.cols())
            throw ParseError(manifest_path + ": tensor entry " + std::to_string(expected_index) +
                             " does not match expected '" + name + "'");
        ++expected_index;
        total_values += m.size();
    });
    if (expected_index != tensor_lines.size())
        throw ParseError(manifest_path + ": unexpected extra tensor entries");

    std::ifstream pin(params_path, std::ios::binary);
    if (!pin) throw IoError("cannot open " + params_path);
    std::vector<float> buffer(total_values);
    pin.read(reinterpret_cast<char*>(buffer.data()),
             static_cast<std::streamsize>(total_values * sizeof(float)));
    if (static_cast<std::size_t>(pin.gcount()) != total_values * sizeof(float))
        throw ParseError(params_path + ": truncated parameter file");
    pin.peek();
    if (!pin.eof()) throw ParseError(params_path + ": trailing bytes after parameters");

    std::size_t offset = 0;
    ckpt.model.params.for_each([&](const std::string&, Matrix& m) {
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<double>(buffer[offset + i]);
        offset += m.size();
    });

    for (const auto& [key, value] : kv)
        if (key.rfind("extra.", 0) == 0) ckpt.extra.emplace(key.substr(6), value);
    return ckpt;
}

}  // namespace crmtext
