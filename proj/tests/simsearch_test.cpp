#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "crmtext/simsearch.hpp"
#include "test_util.hpp"

using namespace crmtext;
using crmtext::testing::note;

namespace {

// 100 non-special tokens with seeded random vectors.
EmbeddingMatrix random_matrix(int tokens, int dim, std::uint64_t seed) {
    std::vector<std::string> names{Vocabulary::pad_token(), Vocabulary::unk_token()};
    for (int i = 0; i < tokens; ++i) names.push_back("w" + std::to_string(i));
    EmbeddingMatrix m(Vocabulary::from_tokens(names), dim);
    Rng rng(seed);
    for (double& v : m.target().flat()) v = rng.uniform(-1.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("cosine basics") {
    std::vector<double> u{1.0, 0.0}, v{0.0, 1.0}, w{1.0, 1.0};
    CHECK(cosine(u, u) == doctest::Approx(1.0));
    CHECK(cosine(u, v) == doctest::Approx(0.0));
    CHECK(cosine(u, w) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(cosine(u, w) == doctest::Approx(0.707107).epsilon(1e-5));

    std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(cosine(u, zero), ConfigError);
    std::vector<double> three{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(cosine(u, three), ShapeError);
}

TEST_CASE("cosine is symmetric and scale invariant") {
    Rng rng(1);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> u(6), v(6);
        for (auto& x : u) x = rng.uniform(-3.0, 3.0);
        for (auto& x : v) x = rng.uniform(-3.0, 3.0);
        const double alpha = rng.uniform(0.01, 50.0);
        std::vector<double> scaled = u;
        for (auto& x : scaled) x *= alpha;
        CHECK(std::fabs(cosine(u, v) - cosine(v, u)) < 1e-12);
        CHECK(std::fabs(cosine(u, v) - cosine(scaled, v)) < 1e-12);
    }
}

TEST_CASE("most_similar agrees with an exhaustive scan") {
    EmbeddingMatrix m = random_matrix(100, 10, 42);
    const Vocabulary& vocab = m.vocab();

    for (int query = Vocabulary::kNumSpecials; query < vocab.size(); ++query) {
        const std::string& qtok = vocab.token_of(query);
        // Independent oracle: naive cosine against every candidate, full sort.
        std::vector<std::pair<double, std::string>> oracle;
        for (int id = Vocabulary::kNumSpecials; id < vocab.size(); ++id) {
            if (id == query) continue;
            auto a = m.vector_of(query);
            auto b = m.vector_of(id);
            double aa = 0, bb = 0, ab = 0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                aa += a[k] * a[k];
                bb += b[k] * b[k];
                ab += a[k] * b[k];
            }
            oracle.emplace_back(ab / (std::sqrt(aa) * std::sqrt(bb)), vocab.token_of(id));
        }
        std::sort(oracle.begin(), oracle.end(), [](const auto& x, const auto& y) {
            return x.first != y.first ? x.first > y.first : x.second < y.second;
        });

        auto hits = most_similar(m, qtok, 10);
        REQUIRE(hits.size() == 10);
        for (std::size_t r = 0; r < hits.size(); ++r) {
            CHECK(hits[r].token == oracle[r].second);
            CHECK(hits[r].similarity == doctest::Approx(oracle[r].first).epsilon(1e-12));
        }
    }
}

TEST_CASE("most_similar contracts") {
    EmbeddingMatrix m = random_matrix(20, 6, 7);

    SUBCASE("never returns the query or specials") {
        auto hits = most_similar(m, "w3", 19);
        for (const auto& h : hits) {
            CHECK(h.token != "w3");
            CHECK(h.token != Vocabulary::pad_token());
            CHECK(h.token != Vocabulary::unk_token());
        }
    }
    SUBCASE("full topk covers every other non-special token exactly once") {
        auto hits = most_similar(m, "w3", m.vocab().size() - Vocabulary::kNumSpecials - 1);
        CHECK(hits.size() == 19);
        std::set<std::string> seen;
        for (const auto& h : hits) CHECK(seen.insert(h.token).second);
    }
    SUBCASE("results are sorted by similarity") {
        auto hits = most_similar(m, "w0", 19);
        for (std::size_t i = 1; i < hits.size(); ++i)
            CHECK(hits[i - 1].similarity >= hits[i].similarity);
    }
    SUBCASE("unknown queries are named in the error") {
        try {
            most_similar(m, "martian", 3);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("martian") != std::string::npos);
        }
        CHECK_THROWS_AS(most_similar(m, "w1", 0), ConfigError);
    }
}

TEST_CASE("expand_keywords puts the seed first, without duplicates") {
    EmbeddingMatrix m = random_matrix(12, 4, 3);
    auto expanded = expand_keywords(m, "w5", 5);
    REQUIRE(expanded.size() == 6);
    CHECK(expanded[0] == "w5");
    std::set<std::string> seen(expanded.begin(), expanded.end());
    CHECK(seen.size() == expanded.size());

    CHECK(expand_keywords(m, "w5", 0) == std::vector<std::string>{"w5"});
    CHECK_THROWS_AS(expand_keywords(m, "nope", 0), ConfigError);
}

TEST_CASE("mine_notes counts per keyword and distinct notes") {
    std::vector<TokenizedNote> notes{
        note("1", {"kufur", "var"}),
        note("2", {"sakin", "gorusme"}),
        note("3", {"yine", "kufur", "tehdit"}),
    };

    SUBCASE("single keyword hits the right notes") {
        MiningReport r = mine_notes(notes, {"kufur"});
        REQUIRE(r.per_keyword.size() == 1);
        CHECK(r.per_keyword[0].note_ids == std::vector<std::string>{"1", "3"});
        CHECK(r.total_distinct_notes == 2);
    }
    SUBCASE("two keywords in one note count once in the union") {
        MiningReport r = mine_notes(notes, {"kufur", "tehdit"});
        CHECK(r.per_keyword[0].note_ids.size() == 2);
        CHECK(r.per_keyword[1].note_ids.size() == 1);
        CHECK(r.total_distinct_notes == 2);  // note 3 carries both
    }
    SUBCASE("union never exceeds the per-keyword sum") {
        MiningReport r = mine_notes(notes, {"kufur", "tehdit", "sakin", "yok"});
        std::size_t total = 0;
        for (const auto& k : r.per_keyword) total += k.note_ids.size();
        CHECK(r.total_distinct_notes <= total);
        CHECK(r.per_keyword[3].note_ids.empty());
    }
}
