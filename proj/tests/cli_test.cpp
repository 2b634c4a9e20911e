// Exercises the crmtext binary end to end: exit codes, output formats, and
// idempotence of reruns. The binary path comes in via CRMTEXT_CLI_PATH.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "test_util.hpp"

using crmtext::testing::TempDir;

namespace {

struct RunResult {
    int exit_code;
    std::string output;  // stdout + stderr
};

RunResult run_cli(const TempDir& dir, const std::string& args) {
    const std::string log = dir.file("last_run.log");
    const std::string cmd = std::string(CRMTEXT_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    res.output = ss.str();
    return res;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_sample_csv(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    out << "note_id,agent_id,lead_label,text\n";
    const char* rows[] = {
        "n1,a1,high,müşteri kampanya fiyatı sordu olumlu döndü",
        "n2,a1,low,ulaşamadım tekrar arayacağım numara meşgul kaldı",
        "n3,a2,high,sözleşme yenileme görüşmesi olumlu geçti fiyat anlaşıldı",
        "n4,a2,low,müşteri müsait değil yarın tekrar aranacak nota düşüldü",
        "n5,a1,high,reklam bütçesi artırıldı kampanya teklifi kabul edildi",
        "n6,a2,low,telefon açılmadı mesaj bırakıldı dönüş bekleniyor şimdilik",
        "n7,a1,high,yeni kampanya fiyatı beğenildi satış tamamlandı mutlu",
        "n8,a2,low,santral yoğun müşteri sonra aranmak istedi tekrar",
    };
    for (const char* r : rows) out << r << "\n";
}

}  // namespace

TEST_CASE("help and version exit cleanly") {
    TempDir dir("cli-help");
    CHECK(run_cli(dir, "--help").exit_code == 0);
    CHECK(run_cli(dir, "preprocess --help").exit_code == 0);
    CHECK(run_cli(dir, "--version").exit_code == 0);
}

TEST_CASE("unknown flags and missing subcommands are usage errors") {
    TempDir dir("cli-usage");
    CHECK(run_cli(dir, "").exit_code == 2);
    CHECK(run_cli(dir, "preprocess --no-such-flag x").exit_code == 2);
    CHECK(run_cli(dir, "frobnicate").exit_code == 2);
}

TEST_CASE("preprocess writes notes, stats and a run manifest") {
    TempDir dir("cli-pre");
    write_sample_csv(dir.file("c.csv"));
    auto res = run_cli(dir, "preprocess --input " + dir.file("c.csv") + " --output " +
                                dir.file("notes.tsv") + " --locale turkish --min-wc 3 --max-wc 40" +
                                " --freq-out " + dir.file("freq.tsv") + " --min-count 2");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("count=8") != std::string::npos);
    CHECK(res.output.find("mean=") != std::string::npos);
    CHECK(res.output.find("std=") != std::string::npos);

    // "müşteri" and "tekrar" appear three times each across the sample rows.
    const std::string freq = slurp(dir.file("freq.tsv"));
    CHECK(freq.find("müşteri\t3") != std::string::npos);
    CHECK(freq.find("tekrar\t3") != std::string::npos);

    const std::string stats = slurp(dir.file("notes.tsv.stats"));
    CHECK(stats == res.output);
    CHECK(slurp(dir.file("notes.tsv.run.json")).find("\"subcommand\": \"preprocess\"") !=
          std::string::npos);

    SUBCASE("rerunning is byte-identical on the primary outputs") {
        const std::string first = slurp(dir.file("notes.tsv"));
        auto again = run_cli(dir, "preprocess --input " + dir.file("c.csv") + " --output " +
                                      dir.file("notes.tsv") +
                                      " --locale turkish --min-wc 3 --max-wc 40");
        CHECK(again.exit_code == 0);
        CHECK(slurp(dir.file("notes.tsv")) == first);
    }
}

TEST_CASE("preprocess error paths use the right exit codes") {
    TempDir dir("cli-pre-err");
    CHECK(run_cli(dir, "preprocess --input " + dir.file("missing.csv") + " --output " +
                           dir.file("x.tsv"))
              .exit_code == 3);

    {
        std::ofstream out(dir.file("empty.csv"), std::ios::binary);
        out << "note_id,agent_id,lead_label,text\n";
    }
    auto res = run_cli(dir, "preprocess --input " + dir.file("empty.csv") + " --output " +
                                dir.file("x.tsv"));
    CHECK(res.exit_code == 3);
    CHECK(res.output.find("no notes") != std::string::npos);

    write_sample_csv(dir.file("c.csv"));
    CHECK(run_cli(dir, "preprocess --input " + dir.file("c.csv") + " --output " + dir.file("x.tsv") +
                           " --min-wc 10 --max-wc 5")
              .exit_code == 2);

    {
        std::ofstream out(dir.file("bad.csv"), std::ios::binary);
        out << "note_id,agent_id,lead_label,text\nn1,a1,urgent,hello there you\n";
    }
    CHECK(run_cli(dir, "preprocess --input " + dir.file("bad.csv") + " --output " + dir.file("x.tsv"))
              .exit_code == 3);
}

namespace {

// Shared fixture: preprocessed notes plus tiny trained vectors.
struct Pipeline {
    TempDir dir{"cli-pipe"};
    std::string notes = dir.file("notes.tsv");
    std::string vectors = dir.file("vec.txt");

    Pipeline() {
        write_sample_csv(dir.file("c.csv"));
        REQUIRE(run_cli(dir, "preprocess --input " + dir.file("c.csv") + " --output " + notes +
                                 " --locale turkish --min-wc 3 --max-wc 40")
                    .exit_code == 0);
        REQUIRE(run_cli(dir, "train-embeddings --notes " + notes + " --out " + vectors +
                                 " --dim 8 --epochs 2 --min-count 1 --seed 7")
                    .exit_code == 0);
    }
};

}  // namespace

TEST_CASE("similar prints topk rows and names unknown words") {
    Pipeline p;
    auto res = run_cli(p.dir, "similar --vectors " + p.vectors + " --word fiyat --topk 4");
    CHECK(res.exit_code == 0);
    int rows = 0;
    std::istringstream lines(res.output);
    std::string line;
    while (std::getline(lines, line))
        if (line.find('\t') != std::string::npos) ++rows;
    CHECK(rows == 4);

    auto unknown = run_cli(p.dir, "similar --vectors " + p.vectors + " --word yokboylebirsey");
    CHECK(unknown.exit_code == 2);
    CHECK(unknown.output.find("yokboylebirsey") != std::string::npos);
}

TEST_CASE("mine emits per-keyword rows and the union count last") {
    Pipeline p;
    auto res = run_cli(p.dir, "mine --vectors " + p.vectors + " --notes " + p.notes +
                                  " --seed-word fiyat --expand 2");
    CHECK(res.exit_code == 0);
    std::istringstream lines(res.output);
    std::string line, last;
    std::string first;
    while (std::getline(lines, line))
        if (!line.empty()) {
            if (first.empty()) first = line;
            last = line;
        }
    CHECK(first.rfind("fiyat\t", 0) == 0);
    CHECK(last.rfind("total_distinct\t", 0) == 0);
}

TEST_CASE("train-task trains, evaluates and predicts") {
    Pipeline p;
    const std::string common = " --epochs 2 --batch 4 --input-len 10 --hidden 3 --dense 6 --seed 5";

    SUBCASE("lead task produces a loadable checkpoint and history") {
        auto res = run_cli(p.dir, "train-task --task lead --notes " + p.notes + " --vectors " +
                                      p.vectors + " --out " + p.dir.file("ck") + common);
        CHECK(res.exit_code == 0);
        CHECK(res.output.find("best_epoch=") != std::string::npos);
        const std::string hist = slurp(p.dir.file("ck.history.csv"));
        CHECK(hist.rfind("epoch,train_loss,val_loss,train_acc,val_acc\n", 0) == 0);

        auto eval = run_cli(p.dir, "eval --checkpoint " + p.dir.file("ck") + " --notes " + p.notes +
                                       " --confusion-out " + p.dir.file("conf.csv"));
        CHECK(eval.exit_code == 0);
        CHECK(eval.output.find("accuracy=") != std::string::npos);
        CHECK(eval.output.find("class.0.f1=") != std::string::npos);
        CHECK(eval.output.find("class.1.f1=") != std::string::npos);
        CHECK(slurp(p.dir.file("conf.csv")).rfind("true\\pred,low,high\n", 0) == 0);

        auto wrong = run_cli(p.dir, "predict-next --checkpoint " + p.dir.file("ck") +
                                        " --words \"a b c\"");
        CHECK(wrong.exit_code == 2);
    }
    SUBCASE("nextword requires an agent and prints exactly topk candidates") {
        CHECK(run_cli(p.dir, "train-task --task nextword --notes " + p.notes + " --vectors " +
                                 p.vectors + " --out " + p.dir.file("nw") + common)
                  .exit_code == 2);

        auto train = run_cli(p.dir, "train-task --task nextword --agent-id a1 --notes " + p.notes +
                                        " --vectors " + p.vectors + " --out " + p.dir.file("nw") +
                                        common + " --split 0.8");
        CHECK(train.exit_code == 0);
        auto pred = run_cli(p.dir, "predict-next --checkpoint " + p.dir.file("nw") +
                                       " --words \"müşteri kampanya fiyatı\" --topk 3");
        CHECK(pred.exit_code == 0);
        int rows = 0;
        std::istringstream lines(pred.output);
        std::string line;
        while (std::getline(lines, line))
            if (line.find('\t') != std::string::npos) ++rows;
        CHECK(rows == 3);
    }
    SUBCASE("agent task honours the word threshold") {
        auto res = run_cli(p.dir, "train-task --task agent --notes " + p.notes + " --vectors " +
                                      p.vectors + " --out " + p.dir.file("ag") + common +
                                      " --min-agent-words 5");
        CHECK(res.exit_code == 0);
        auto eval = run_cli(p.dir, "eval --checkpoint " + p.dir.file("ag") + " --notes " + p.notes);
        CHECK(eval.exit_code == 0);
        CHECK(eval.output.find("top3_accuracy=") != std::string::npos);

        CHECK(run_cli(p.dir, "train-task --task agent --notes " + p.notes + " --vectors " +
                                 p.vectors + " --out " + p.dir.file("ag2") + common +
                                 " --min-agent-words 100000")
                  .exit_code == 2);
    }
    SUBCASE("missing embeddings source is a usage error") {
        CHECK(run_cli(p.dir, "train-task --task lead --notes " + p.notes + " --out " +
                                 p.dir.file("ck2") + common)
                  .exit_code == 2);
    }
    SUBCASE("random embeddings work without a vector file") {
        auto res = run_cli(p.dir, "train-task --task lead --notes " + p.notes +
                                      " --random-embeddings --dim 6 --min-count 1 --out " +
                                      p.dir.file("ckr") + common);
        CHECK(res.exit_code == 0);
    }
}

TEST_CASE("train-embeddings accepts a flat key=value config file") {
    Pipeline p;
    {
        std::ofstream out(p.dir.file("emb.cfg"), std::ios::binary);
        out << "dim=6\nepochs=1\nmin-count=1\nseed=9\n";
    }
    auto first_line = [&](const std::string& path) {
        std::istringstream content(slurp(path));
        std::string line;
        REQUIRE(std::getline(content, line));
        return line;
    };

    SUBCASE("config values fill in unset flags") {
        auto res = run_cli(p.dir, "train-embeddings --notes " + p.notes + " --out " +
                                      p.dir.file("v2.txt") + " --config " + p.dir.file("emb.cfg"));
        CHECK(res.exit_code == 0);
        CHECK(first_line(p.dir.file("v2.txt")).find(" 6") != std::string::npos);
    }
    SUBCASE("explicit flags beat the config file") {
        auto res = run_cli(p.dir, "train-embeddings --notes " + p.notes + " --out " +
                                      p.dir.file("v3.txt") + " --config " + p.dir.file("emb.cfg") +
                                      " --dim 4");
        CHECK(res.exit_code == 0);
        CHECK(first_line(p.dir.file("v3.txt")).find(" 4") != std::string::npos);
    }
    SUBCASE("the environment variable supplies the default config path") {
        const std::string log = p.dir.file("env_run.log");
        const std::string cmd = "CRMTEXT_CONFIG=" + p.dir.file("emb.cfg") + " " +
                                std::string(CRMTEXT_CLI_PATH) + " train-embeddings --notes " +
                                p.notes + " --out " + p.dir.file("v4.txt") + " > " + log + " 2>&1";
        REQUIRE(std::system(cmd.c_str()) == 0);
        CHECK(first_line(p.dir.file("v4.txt")).find(" 6") != std::string::npos);
    }
    SUBCASE("unknown config keys are flagged") {
        std::ofstream out(p.dir.file("bad.cfg"), std::ios::binary);
        out << "dimension=6\n";
        out.close();
        auto res = run_cli(p.dir, "train-embeddings --notes " + p.notes + " --out " +
                                      p.dir.file("v5.txt") + " --config " + p.dir.file("bad.cfg"));
        CHECK(res.exit_code == 2);
        CHECK(res.output.find("dimension") != std::string::npos);
    }
}

TEST_CASE("per-task defaults: dim 50, lead 100x1024, multiclass 125x512") {
    Pipeline p;
    auto res = run_cli(p.dir, "train-embeddings --notes " + p.notes + " --out " +
                                  p.dir.file("v50.txt") + " --epochs 1 --min-count 1");
    CHECK(res.exit_code == 0);
    std::istringstream content(slurp(p.dir.file("v50.txt")));
    std::string header;
    REQUIRE(std::getline(content, header));
    CHECK(header.substr(header.find(' ')) == " 50");

    const std::string tiny = " --input-len 6 --hidden 2 --dense 4 --seed 5 --epochs 2";
    REQUIRE(run_cli(p.dir, "train-task --task lead --notes " + p.notes + " --vectors " + p.vectors +
                               " --out " + p.dir.file("dl") + tiny)
                .exit_code == 0);
    CHECK(slurp(p.dir.file("dl.run.json")).find("\"batch\": 1024") != std::string::npos);

    REQUIRE(run_cli(p.dir, "train-task --task agent --min-agent-words 5 --notes " + p.notes +
                               " --vectors " + p.vectors + " --out " + p.dir.file("da") + tiny)
                .exit_code == 0);
    CHECK(slurp(p.dir.file("da.run.json")).find("\"batch\": 512") != std::string::npos);

    // Epoch defaults only show when --epochs is omitted; the corpus is tiny
    // enough to run the full 100/125.
    REQUIRE(run_cli(p.dir, "train-task --task lead --notes " + p.notes + " --vectors " + p.vectors +
                               " --out " + p.dir.file("dl2") + " --input-len 6 --hidden 2" +
                               " --dense 4 --seed 5")
                .exit_code == 0);
    CHECK(slurp(p.dir.file("dl2.run.json")).find("\"epochs\": 100") != std::string::npos);
    std::istringstream hist(slurp(p.dir.file("dl2.history.csv")));
    std::string line;
    int rows = -1;  // header
    while (std::getline(hist, line)) ++rows;
    CHECK(rows == 100);
}

TEST_CASE("parallel embedding training warns about determinism") {
    Pipeline p;
    auto res = run_cli(p.dir, "train-embeddings --notes " + p.notes + " --out " +
                                  p.dir.file("vp.txt") + " --dim 6 --epochs 1 --min-count 1" +
                                  " --parallel 2");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("not reproducible") != std::string::npos);
}
