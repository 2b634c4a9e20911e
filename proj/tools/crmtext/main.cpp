// crmtext: command line front end for the note-mining toolkit. One
// subcommand per pipeline stage; all primary outputs are deterministic for a
// fixed seed in single-threaded mode.
//
// Exit codes: 0 success, 2 usage/config error, 3 I/O or input parse error,
// 4 numerical failure during training.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crmtext/corpus.hpp"
#include "crmtext/embeddings.hpp"
#include "crmtext/neural.hpp"
#include "crmtext/simsearch.hpp"
#include "crmtext/tasks.hpp"
#include "crmtext/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace crmtext;

namespace {

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Every produced artifact gets a sibling <artifact>.run.json describing the
// run. Written atomically (tmp + rename) so readers never see a partial
// manifest. Timestamps make manifests differ between reruns; primary
// outputs do not.
struct RunManifest {
    std::string subcommand;
    json config = json::object();
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string started_at = iso_timestamp();

    void write(const fs::path& artifact) const {
        json doc{
            {"tool", "crmtext"},
            {"version", kVersion},
            {"subcommand", subcommand},
            {"config", config},
            {"seed", seed},
            {"inputs", inputs},
            {"outputs", outputs},
            {"started_at", started_at},
            {"finished_at", iso_timestamp()},
        };
        fs::path final_path = artifact;
        final_path += ".run.json";
        fs::path tmp_path = final_path;
        tmp_path += ".tmp";
        {
            std::ofstream out(tmp_path, std::ios::binary);
            if (!out) throw IoError("cannot open " + tmp_path.string() + " for writing");
            out << doc.dump(2) << '\n';
            out.flush();
            if (!out) throw IoError("failed writing " + tmp_path.string());
        }
        fs::rename(tmp_path, final_path);
    }
};

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

TextLocale parse_locale(const std::string& name) {
    if (name == "generic") return TextLocale::generic;
    if (name == "turkish") return TextLocale::turkish;
    throw ConfigError("unknown locale '" + name + "' (expected generic or turkish)");
}

// --- preprocess ---------------------------------------------------------------

struct PreprocessArgs {
    std::string input;
    std::string output;
    std::string locale = "generic";
    int min_wc = 5;
    int max_wc = 100;
    int min_count = 5;
    std::string freq_out;
    std::string stats_out;
};

int run_preprocess(const PreprocessArgs& args) {
    auto raw = read_corpus_auto(args.input);
    if (raw.empty()) throw IoError("input " + args.input + " contains no notes");

    auto notes = tokenize_notes(raw, parse_locale(args.locale));
    notes = dedup_notes(std::move(notes));
    notes = filter_notes(std::move(notes), FilterBounds{args.min_wc, args.max_wc});
    if (notes.empty())
        throw IoError("no notes remain after filtering to [" + std::to_string(args.min_wc) + ", " +
                      std::to_string(args.max_wc) + "] words");

    write_notes_tsv(notes, args.output);

    const CorpusStats stats = corpus_stats(notes);
    const std::string report = format_stats_report(stats);
    const std::string stats_path = args.stats_out.empty() ? args.output + ".stats" : args.stats_out;
    write_text_file(stats_path, report);
    std::cout << report;

    RunManifest manifest;
    manifest.subcommand = "preprocess";
    manifest.config = {{"locale", args.locale}, {"min_wc", args.min_wc},  {"max_wc", args.max_wc},
                       {"min_count", args.min_count}};
    manifest.inputs = {args.input};
    manifest.outputs = {args.output, stats_path};

    if (!args.freq_out.empty()) {
        Vocabulary vocab = Vocabulary::build(notes, args.min_count);
        export_frequencies(vocab, args.freq_out);
        manifest.outputs.push_back(args.freq_out);
    }
    manifest.write(args.output);
    return 0;
}

// --- train-embeddings ----------------------------------------------------------

struct TrainEmbeddingsArgs {
    std::string notes;
    std::string out;
    std::string config_path;
    SgnsConfig cfg;
    int min_count = 5;
};

// Flat key=value config file for train-embeddings. Values only apply to
// options the command line left untouched, so flags always win.
void apply_embeddings_config(const CLI::App& sub, TrainEmbeddingsArgs& args) {
    std::string path = args.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("CRMTEXT_CONFIG")) path = env;
    }
    if (path.empty()) return;

    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path);

    auto as_int = [&](const std::string& key, const std::string& value) {
        try {
            return std::stoll(value);
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' needs an integer, got '" + value + "'");
        }
    };
    auto as_double = [&](const std::string& key, const std::string& value) {
        try {
            return std::stod(value);
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' needs a number, got '" + value + "'");
        }
    };
    auto untouched = [&](const std::string& flag) { return sub.count(flag) == 0; };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config file " + path + ": expected key=value on line " +
                              std::to_string(line_no));
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "dim") {
            if (untouched("--dim")) args.cfg.dim = static_cast<int>(as_int(key, value));
        } else if (key == "window") {
            if (untouched("--window")) args.cfg.window = static_cast<int>(as_int(key, value));
        } else if (key == "neg") {
            if (untouched("--neg")) args.cfg.negatives = static_cast<int>(as_int(key, value));
        } else if (key == "epochs") {
            if (untouched("--epochs")) args.cfg.epochs = static_cast<int>(as_int(key, value));
        } else if (key == "seed") {
            if (untouched("--seed"))
                args.cfg.seed = static_cast<std::uint64_t>(as_int(key, value));
        } else if (key == "initial-lr") {
            if (untouched("--initial-lr")) args.cfg.initial_lr = as_double(key, value);
        } else if (key == "final-lr") {
            if (untouched("--final-lr")) args.cfg.final_lr = as_double(key, value);
        } else if (key == "neg-power") {
            if (untouched("--neg-power")) args.cfg.neg_power = as_double(key, value);
        } else if (key == "parallel") {
            if (untouched("--parallel")) args.cfg.threads = static_cast<int>(as_int(key, value));
        } else if (key == "min-count") {
            if (untouched("--min-count")) args.min_count = static_cast<int>(as_int(key, value));
        } else {
            throw ConfigError("config file " + path + ": unknown key '" + key + "' on line " +
                              std::to_string(line_no));
        }
    }
}

int run_train_embeddings(const TrainEmbeddingsArgs& args) {
    args.cfg.validate();
    if (args.cfg.threads > 1)
        std::cerr << "warning: --parallel " << args.cfg.threads
                  << " uses lock-free shared updates; results are not reproducible\n";

    auto notes = read_notes_tsv(args.notes);
    if (notes.empty()) throw IoError("notes file " + args.notes + " is empty");
    Vocabulary vocab = Vocabulary::build(notes, args.min_count);
    auto encoded = encode_for_sgns(notes, vocab);

    EmbeddingMatrix matrix =
        train_embeddings(encoded, vocab, args.cfg, [&](int epoch, const EmbeddingMatrix&) {
            std::cerr << "epoch " << epoch << "/" << args.cfg.epochs << " done\n";
        });
    save_vectors(matrix, args.out);

    RunManifest manifest;
    manifest.subcommand = "train-embeddings";
    manifest.seed = args.cfg.seed;
    manifest.config = {{"dim", args.cfg.dim},
                       {"window", args.cfg.window},
                       {"negatives", args.cfg.negatives},
                       {"epochs", args.cfg.epochs},
                       {"initial_lr", args.cfg.initial_lr},
                       {"final_lr", args.cfg.final_lr},
                       {"neg_power", args.cfg.neg_power},
                       {"threads", args.cfg.threads},
                       {"min_count", args.min_count}};
    manifest.inputs = {args.notes};
    manifest.outputs = {args.out};
    manifest.write(args.out);
    return 0;
}

// --- similar / mine -------------------------------------------------------------

int run_similar(const std::string& vectors, const std::string& word, int topk) {
    EmbeddingMatrix matrix = load_vectors(vectors);
    char buf[32];
    for (const SimilarityHit& hit : most_similar(matrix, word, topk)) {
        std::snprintf(buf, sizeof(buf), "%.6f", hit.similarity);
        std::cout << hit.token << '\t' << buf << '\n';
    }
    return 0;
}

int run_mine(const std::string& vectors, const std::string& notes_path, const std::string& seed_word,
             int expand) {
    EmbeddingMatrix matrix = load_vectors(vectors);
    auto notes = read_notes_tsv(notes_path);
    auto keywords = expand_keywords(matrix, seed_word, expand);
    MiningReport report = mine_notes(notes, keywords);
    for (const auto& hits : report.per_keyword) {
        std::cout << hits.keyword << '\t' << hits.note_ids.size();
        for (const std::string& id : hits.note_ids) std::cout << '\t' << id;
        std::cout << '\n';
    }
    std::cout << "total_distinct\t" << report.total_distinct_notes << '\n';
    return 0;
}

// --- train-task -----------------------------------------------------------------

struct TrainTaskArgs {
    std::string task;
    std::string notes;
    std::string vectors;
    bool random_embeddings = false;
    int dim = 50;
    std::string out;
    std::string agent_id;
    int epochs = -1;  // -1: per-task default
    int batch = -1;
    std::uint64_t seed = 1;
    int input_len = 100;
    int hidden = 64;
    int dense = 256;
    std::int64_t min_agent_words = 300000;
    double split = 0.9;
    int patience = 0;
    bool trainable_embeddings = false;
    int min_count = 5;
    double lr = 1e-3;
};

int run_train_task(const TrainTaskArgs& args) {
    const bool is_lead = args.task == "lead";
    const bool is_agent = args.task == "agent";
    const bool is_nextword = args.task == "nextword";
    if (!is_lead && !is_agent && !is_nextword)
        throw ConfigError("unknown task '" + args.task + "' (expected lead, agent or nextword)");
    if (is_nextword && args.agent_id.empty())
        throw ConfigError("task nextword requires --agent-id");
    if (args.vectors.empty() && !args.random_embeddings)
        throw ConfigError("provide --vectors or pass --random-embeddings");

    auto notes = read_notes_tsv(args.notes);
    if (notes.empty()) throw IoError("notes file " + args.notes + " is empty");

    std::optional<EmbeddingMatrix> pretrained;
    if (!args.vectors.empty()) pretrained.emplace(load_vectors(args.vectors));
    const int embed_dim = pretrained ? pretrained->dim() : args.dim;

    // Dataset + vocabulary + embedding table per task.
    Dataset dataset;
    std::vector<std::string> vocab_tokens;
    std::optional<Matrix> embedding;
    Rng run_rng(args.seed);

    auto use_vocab = [&](const Vocabulary& vocab) {
        vocab_tokens.clear();
        for (int id = 0; id < vocab.size(); ++id) vocab_tokens.push_back(vocab.token_of(id));
    };

    if (is_nextword) {
        std::vector<TokenizedNote> agent_notes;
        for (const TokenizedNote& n : notes)
            if (n.agent_id == args.agent_id) agent_notes.push_back(n);
        if (agent_notes.empty())
            throw ConfigError("agent '" + args.agent_id + "' has no notes in " + args.notes);
        NextwordData nd = make_nextword_dataset(agent_notes);
        dataset = std::move(nd.dataset);
        use_vocab(nd.vocab);
        if (pretrained) embedding = remap_embeddings(*pretrained, nd.vocab, run_rng);
    } else {
        Vocabulary vocab = pretrained ? pretrained->vocab()
                                      : Vocabulary::build(notes, args.min_count);
        dataset = is_lead ? make_lead_dataset(notes, vocab, args.input_len)
                          : make_agent_dataset(notes, vocab,
                                               AgentDatasetOptions{args.min_agent_words,
                                                                   args.input_len});
        use_vocab(vocab);
        if (pretrained) embedding = pretrained->target();
    }

    ModelConfig mcfg;
    mcfg.vocab_size = dataset.vocab_size;
    mcfg.embed_dim = embed_dim;
    mcfg.hidden = args.hidden;
    mcfg.dense = args.dense;
    mcfg.classes = is_lead ? 1 : dataset.num_classes();
    // A randomly initialized table has to train; a pretrained one is frozen
    // unless explicitly flipped.
    mcfg.train_embedding = args.trainable_embeddings || !pretrained;
    mcfg.seed = args.seed;

    TrainConfig tcfg;
    tcfg.max_epochs = args.epochs > 0 ? args.epochs : (is_lead ? 100 : 125);
    tcfg.batch_size = args.batch > 0 ? args.batch : (is_lead ? 1024 : 512);
    tcfg.split_fraction = args.split;
    tcfg.seed = args.seed;
    tcfg.adam.lr = args.lr;
    if (args.patience > 0) {
        tcfg.stop = StopMode::patience;
        tcfg.patience = args.patience;
    }

    TrainResult result = train_classifier(dataset, mcfg, tcfg,
                                          embedding ? &*embedding : nullptr,
                                          [&](int epoch, double tl, double vl, double ta, double va) {
                                              std::fprintf(stderr,
                                                           "epoch %d train_loss=%.6f val_loss=%.6f "
                                                           "train_acc=%.4f val_acc=%.4f\n",
                                                           epoch, tl, vl, ta, va);
                                          });

    // Checkpoint: manifest+params plus the vocabulary and label sidecars
    // needed to rebuild evaluation datasets.
    std::vector<std::pair<std::string, std::string>> extra{
        {"task", args.task},
        {"input_len", std::to_string(dataset.seq_len)},
    };
    if (is_nextword) extra.emplace_back("agent_id", args.agent_id);
    if (is_agent) extra.emplace_back("min_agent_words", std::to_string(args.min_agent_words));
    save_checkpoint(result.model, args.out, extra);

    std::string vocab_blob;
    for (const std::string& tok : vocab_tokens) vocab_blob += tok + "\n";
    write_text_file(args.out + ".vocab", vocab_blob);
    if (!is_nextword) {
        std::string label_blob;
        for (const std::string& name : dataset.label_names) label_blob += name + "\n";
        write_text_file(args.out + ".labels", label_blob);
    }
    write_text_file(args.out + ".history.csv", result.report.to_csv());

    const std::size_t best = result.report.best_epoch;
    std::cout << "best_epoch=" << best + 1 << "\n"
              << "best_val_loss=" << result.report.val_loss[best] << "\n"
              << "best_val_acc=" << result.report.val_acc[best] << "\n";
    std::fprintf(stderr, "trained %zu epochs in %.1f s\n", result.report.val_loss.size(),
                 result.report.wall_seconds);

    RunManifest manifest;
    manifest.subcommand = "train-task";
    manifest.seed = args.seed;
    manifest.config = {{"task", args.task},
                       {"epochs", tcfg.max_epochs},
                       {"batch", tcfg.batch_size},
                       {"input_len", args.input_len},
                       {"hidden", args.hidden},
                       {"dense", args.dense},
                       {"split", args.split},
                       {"patience", args.patience},
                       {"lr", args.lr},
                       {"trainable_embeddings", mcfg.train_embedding},
                       {"min_agent_words", args.min_agent_words},
                       {"agent_id", args.agent_id},
                       {"embeddings", args.vectors.empty() ? "random" : args.vectors}};
    manifest.inputs = {args.notes};
    if (!args.vectors.empty()) manifest.inputs.push_back(args.vectors);
    manifest.outputs = {args.out + ".manifest", args.out + ".params", args.out + ".vocab",
                        args.out + ".history.csv"};
    if (!is_nextword) manifest.outputs.push_back(args.out + ".labels");
    manifest.write(args.out);
    return 0;
}

// --- eval / predict-next ----------------------------------------------------------

struct LoadedTask {
    Checkpoint ckpt;
    Vocabulary vocab;
    std::vector<std::string> label_names;
    std::string task;
    int input_len = 0;
};

LoadedTask load_task_checkpoint(const std::string& prefix) {
    LoadedTask lt{load_checkpoint(prefix), Vocabulary::from_tokens(read_lines(prefix + ".vocab")),
                  {}, {}, 0};

    auto need = [&](const char* key) {
        auto it = lt.ckpt.extra.find(key);
        if (it == lt.ckpt.extra.end())
            throw ParseError(prefix + ".manifest: missing extra." + std::string(key));
        return it->second;
    };
    lt.task = need("task");
    lt.input_len = std::stoi(need("input_len"));
    if (lt.vocab.size() != lt.ckpt.model.cfg.vocab_size)
        throw ParseError(prefix + ".vocab does not match the checkpoint vocabulary size");

    if (lt.task == "nextword") {
        for (int id = 0; id < lt.vocab.size(); ++id) lt.label_names.push_back(lt.vocab.token_of(id));
    } else {
        auto lines = read_lines(prefix + ".labels");
        while (!lines.empty() && lines.back().empty()) lines.pop_back();
        lt.label_names = std::move(lines);
        if (lt.label_names.empty()) throw ParseError(prefix + ".labels is empty");
    }
    return lt;
}

Dataset rebuild_dataset(const LoadedTask& lt, const std::vector<TokenizedNote>& notes) {
    Dataset ds;
    ds.seq_len = static_cast<std::size_t>(lt.input_len);
    ds.vocab_size = lt.vocab.size();
    ds.label_names = lt.label_names;

    if (lt.task == "lead") {
        ds = make_lead_dataset(notes, lt.vocab, lt.input_len);
    } else if (lt.task == "agent") {
        std::map<std::string, int> class_of;
        for (std::size_t i = 0; i < lt.label_names.size(); ++i)
            class_of.emplace(lt.label_names[i], static_cast<int>(i));
        for (const TokenizedNote& note : notes) {
            auto it = class_of.find(note.agent_id);
            if (it == class_of.end()) continue;
            auto row = encode_note(note.tokens, lt.vocab, lt.input_len);
            ds.ids.insert(ds.ids.end(), row.begin(), row.end());
            ds.labels.push_back(it->second);
            ++ds.num_rows;
        }
        if (ds.num_rows == 0)
            throw ConfigError("no notes belong to any of the checkpoint's agent classes");
    } else if (lt.task == "nextword") {
        auto agent_it = lt.ckpt.extra.find("agent_id");
        for (const TokenizedNote& note : notes) {
            if (agent_it != lt.ckpt.extra.end() && !agent_it->second.empty() &&
                note.agent_id != agent_it->second)
                continue;
            if (note.tokens.size() < 4) continue;
            auto ids = lt.vocab.encode(note.tokens);
            for (std::size_t i = 0; i + 3 < ids.size(); ++i) {
                ds.ids.insert(ds.ids.end(), {ids[i], ids[i + 1], ids[i + 2]});
                ds.labels.push_back(ids[i + 3]);
                ++ds.num_rows;
            }
        }
        if (ds.num_rows == 0) throw ConfigError("no 4-token windows found for evaluation");
    } else {
        throw ParseError("checkpoint has unknown task '" + lt.task + "'");
    }
    return ds;
}

int run_eval(const std::string& checkpoint, const std::string& notes_path,
             const std::string& confusion_out, const std::string& report_out) {
    LoadedTask lt = load_task_checkpoint(checkpoint);
    auto notes = read_notes_tsv(notes_path);
    Dataset ds = rebuild_dataset(lt, notes);

    Metrics metrics = evaluate(lt.ckpt.model, ds);
    std::string report = metrics.to_report(ds.label_names);
    if (lt.ckpt.model.cfg.head() == HeadType::softmax) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "top3_accuracy=%.9g\n",
                      topk_accuracy(lt.ckpt.model, ds, 3));
        report += buf;
    }
    std::cout << report;

    if (!report_out.empty()) write_text_file(report_out, report);
    if (!confusion_out.empty()) write_text_file(confusion_out, metrics.confusion_csv(ds.label_names));

    if (!report_out.empty() || !confusion_out.empty()) {
        RunManifest manifest;
        manifest.subcommand = "eval";
        manifest.config = {{"checkpoint", checkpoint}};
        manifest.inputs = {checkpoint + ".manifest", notes_path};
        if (!report_out.empty()) manifest.outputs.push_back(report_out);
        if (!confusion_out.empty()) manifest.outputs.push_back(confusion_out);
        manifest.write(report_out.empty() ? confusion_out : report_out);
    }
    return 0;
}

int run_predict_next(const std::string& checkpoint, const std::string& words_arg, int topk,
                     const std::string& locale) {
    LoadedTask lt = load_task_checkpoint(checkpoint);
    if (lt.task != "nextword")
        throw ConfigError("checkpoint task is '" + lt.task + "', expected nextword");

    auto words = tokenize(normalize_text(words_arg, parse_locale(locale)));
    if (words.size() != 3)
        throw ConfigError("expected exactly 3 words, got " + std::to_string(words.size()));

    char buf[32];
    for (const Prediction& p : predict_next(lt.ckpt.model, lt.vocab, words, topk)) {
        std::snprintf(buf, sizeof(buf), "%.6f", p.probability);
        std::cout << p.token << '\t' << buf << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"text mining and sequence classification over CRM notes"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    PreprocessArgs pre;
    auto* sub_pre = app.add_subcommand("preprocess",
                                       "normalize, tokenize, dedup and filter a raw corpus");
    sub_pre->add_option("--input", pre.input, "raw corpus: CSV with header or one note per line")
        ->required();
    sub_pre->add_option("--output", pre.output, "tokenized notes TSV to write")->required();
    sub_pre->add_option("--locale", pre.locale, "generic or turkish")->capture_default_str();
    sub_pre->add_option("--min-wc", pre.min_wc, "minimum words per note (inclusive)")
        ->capture_default_str();
    sub_pre->add_option("--max-wc", pre.max_wc, "maximum words per note (inclusive)")
        ->capture_default_str();
    sub_pre->add_option("--min-count", pre.min_count, "vocabulary threshold for --freq-out")
        ->capture_default_str();
    sub_pre->add_option("--freq-out", pre.freq_out, "optional token frequency TSV");
    sub_pre->add_option("--stats-out", pre.stats_out, "stats report path (default <output>.stats)");

    TrainEmbeddingsArgs emb;
    auto* sub_emb = app.add_subcommand("train-embeddings",
                                       "train skip-gram negative-sampling word vectors");
    sub_emb->add_option("--config", emb.config_path,
                        "flat key=value config file (default from $CRMTEXT_CONFIG); "
                        "explicit flags win");
    sub_emb->add_option("--notes", emb.notes, "tokenized notes TSV")->required();
    sub_emb->add_option("--out", emb.out, "word vector file to write")->required();
    sub_emb->add_option("--dim", emb.cfg.dim, "embedding size (sweep: 50/100/200/300)")
        ->capture_default_str();
    sub_emb->add_option("--window", emb.cfg.window, "context window radius")->capture_default_str();
    sub_emb->add_option("--neg", emb.cfg.negatives, "negative samples per pair")
        ->capture_default_str();
    sub_emb->add_option("--epochs", emb.cfg.epochs, "full corpus passes")->capture_default_str();
    sub_emb->add_option("--seed", emb.cfg.seed, "random seed")->capture_default_str();
    sub_emb->add_option("--initial-lr", emb.cfg.initial_lr, "starting learning rate")
        ->capture_default_str();
    sub_emb->add_option("--final-lr", emb.cfg.final_lr, "learning rate after decay")
        ->capture_default_str();
    sub_emb->add_option("--neg-power", emb.cfg.neg_power, "unigram distortion exponent")
        ->capture_default_str();
    sub_emb->add_option("--parallel", emb.cfg.threads, "worker threads (>1 is non-deterministic)")
        ->capture_default_str();
    sub_emb->add_option("--min-count", emb.min_count, "drop tokens used fewer times")
        ->capture_default_str();

    std::string sim_vectors, sim_word;
    int sim_topk = 5;
    auto* sub_sim = app.add_subcommand("similar", "nearest tokens by cosine similarity");
    sub_sim->add_option("--vectors", sim_vectors, "word vector file")->required();
    sub_sim->add_option("--word", sim_word, "query token")->required();
    sub_sim->add_option("--topk", sim_topk, "hits to print")->capture_default_str();

    std::string mine_vectors, mine_notes_path, mine_seed;
    int mine_expand = 5;
    auto* sub_mine = app.add_subcommand("mine", "keyword-expansion note mining");
    sub_mine->add_option("--vectors", mine_vectors, "word vector file")->required();
    sub_mine->add_option("--notes", mine_notes_path, "tokenized notes TSV")->required();
    sub_mine->add_option("--seed-word", mine_seed, "keyword to expand")->required();
    sub_mine->add_option("--expand", mine_expand, "similar tokens to add")->capture_default_str();

    TrainTaskArgs task;
    auto* sub_task = app.add_subcommand("train-task", "train a note classifier");
    sub_task->add_option("--task", task.task, "lead, agent or nextword")->required();
    sub_task->add_option("--notes", task.notes, "tokenized notes TSV")->required();
    sub_task->add_option("--vectors", task.vectors, "pretrained word vector file");
    sub_task->add_flag("--random-embeddings", task.random_embeddings,
                       "skip pretrained vectors; implies a trainable table");
    sub_task->add_option("--dim", task.dim, "embedding size with --random-embeddings")
        ->capture_default_str();
    sub_task->add_option("--out", task.out, "checkpoint prefix to write")->required();
    sub_task->add_option("--agent-id", task.agent_id, "agent for task nextword");
    sub_task->add_option("--epochs", task.epochs, "max epochs (default 100 lead / 125 multiclass)");
    sub_task->add_option("--batch", task.batch, "batch size (default 1024 lead / 512 multiclass)");
    sub_task->add_option("--seed", task.seed, "random seed")->capture_default_str();
    sub_task->add_option("--input-len", task.input_len, "ids per row; shorter notes are padded")
        ->capture_default_str();
    sub_task->add_option("--hidden", task.hidden, "LSTM hidden nodes per direction")
        ->capture_default_str();
    sub_task->add_option("--dense", task.dense, "dense layer width")->capture_default_str();
    sub_task->add_option("--min-agent-words", task.min_agent_words,
                         "word threshold for agent classes")
        ->capture_default_str();
    sub_task->add_option("--split", task.split, "train fraction")->capture_default_str();
    sub_task->add_option("--patience", task.patience,
                         "stop after this many epochs without improvement (0 = full run)")
        ->capture_default_str();
    sub_task->add_flag("--trainable-embeddings", task.trainable_embeddings,
                       "update the embedding table during training");
    sub_task->add_option("--min-count", task.min_count,
                         "vocabulary threshold with --random-embeddings")
        ->capture_default_str();
    sub_task->add_option("--lr", task.lr, "Adam learning rate")->capture_default_str();

    std::string eval_ckpt, eval_notes, eval_confusion, eval_report;
    auto* sub_eval = app.add_subcommand("eval", "evaluate a checkpoint on a notes file");
    sub_eval->add_option("--checkpoint", eval_ckpt, "checkpoint prefix")->required();
    sub_eval->add_option("--notes", eval_notes, "tokenized notes TSV")->required();
    sub_eval->add_option("--confusion-out", eval_confusion, "write the confusion matrix CSV here");
    sub_eval->add_option("--report-out", eval_report, "also write the metric report here");

    std::string pred_ckpt, pred_words, pred_locale = "generic";
    int pred_topk = 3;
    auto* sub_pred = app.add_subcommand("predict-next", "rank next-word candidates");
    sub_pred->add_option("--checkpoint", pred_ckpt, "nextword checkpoint prefix")->required();
    sub_pred->add_option("--words", pred_words, "three context words, quoted")->required();
    sub_pred->add_option("--topk", pred_topk, "candidates to print")->capture_default_str();
    sub_pred->add_option("--locale", pred_locale, "normalization locale for the words")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
        if (sub_pre->parsed()) return run_preprocess(pre);
        if (sub_emb->parsed()) {
            apply_embeddings_config(*sub_emb, emb);
            return run_train_embeddings(emb);
        }
        if (sub_sim->parsed()) return run_similar(sim_vectors, sim_word, sim_topk);
        if (sub_mine->parsed()) return run_mine(mine_vectors, mine_notes_path, mine_seed, mine_expand);
        if (sub_task->parsed()) return run_train_task(task);
        if (sub_eval->parsed()) return run_eval(eval_ckpt, eval_notes, eval_confusion, eval_report);
        if (sub_pred->parsed())
            return run_predict_next(pred_ckpt, pred_words, pred_topk, pred_locale);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
}
