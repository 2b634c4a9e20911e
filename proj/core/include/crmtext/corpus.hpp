#ifndef CRMTEXT_CORPUS_HPP
#define CRMTEXT_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crmtext/errors.hpp"

namespace crmtext {

enum class LeadLabel { none, low, high };

enum class TextLocale { generic, turkish };

/// One note as stored in the source system: free text plus identifiers and
/// an optional manually assigned priority label.
struct RawNote {
    std::string note_id;
    std::string agent_id;
    LeadLabel lead = LeadLabel::none;
    std::string text;
};

/// A note after normalization and tokenization. Tokens are non-empty,
/// lowercase, and free of separator characters.
struct TokenizedNote {
    std::string note_id;
    std::string agent_id;
    LeadLabel lead = LeadLabel::none;
    std::vector<std::string> tokens;
};

/// Lowercases the input and replaces every character that is not a Unicode
/// letter or digit with a space; runs of whitespace collapse to a single
/// space and the result is trimmed. Total and idempotent. With
/// TextLocale::turkish the dotted/dotless i pair is mapped the Turkish way
/// ('I' -> U+0131, 'İ' -> 'i'). Bytes that are not valid UTF-8 are treated
/// as separators.
std::string normalize_text(std::string_view raw, TextLocale locale = TextLocale::generic);

/// Splits normalized text on runs of whitespace. Never yields empty tokens.
std::vector<std::string> tokenize(std::string_view normalized);

/// normalize_text + tokenize for a whole corpus, keeping ids and labels.
std::vector<TokenizedNote> tokenize_notes(const std::vector<RawNote>& notes,
                                          TextLocale locale = TextLocale::generic);

/// Inclusive token-count bounds for outlier removal.
struct FilterBounds {
    int min_wc = 5;
    int max_wc = 100;
};

/// Keeps exactly the notes whose token count lies in [min_wc, max_wc],
/// preserving order. Throws ConfigError for min_wc > max_wc or negative
/// bounds.
std::vector<TokenizedNote> filter_notes(std::vector<TokenizedNote> notes, FilterBounds bounds = {});

/// Drops notes whose token sequence already occurred earlier in the list;
/// the first occurrence survives. Equality is exact and order-sensitive.
std::vector<TokenizedNote> dedup_notes(std::vector<TokenizedNote> notes);

/// Bidirectional token<->id map with per-token counts. Ids are contiguous:
/// PAD is always 0 and UNK always 1 (both carry count 0), followed by every
/// token whose corpus count reaches min_count, ordered by descending count
/// with lexicographic tie-break. Immutable once built.
class Vocabulary {
public:
    static constexpr int kPadId = 0;
    static constexpr int kUnkId = 1;
    static constexpr int kNumSpecials = 2;

    static const std::string& pad_token();
    static const std::string& unk_token();

    /// Counts tokens over the corpus and keeps those with count >= min_count.
    /// Throws ConfigError if the corpus has no notes or no tokens.
    static Vocabulary build(const std::vector<TokenizedNote>& notes, int min_count = 5);

    /// Rebuilds a vocabulary from tokens listed in id order, e.g. from a
    /// saved vector file. The first two tokens must be the PAD and UNK
    /// markers. Counts are unknown and recorded as zero.
    static Vocabulary from_tokens(const std::vector<std::string>& tokens_in_id_order);

    /// Id of the token, or kUnkId when the token is not in the vocabulary.
    int id_of(std::string_view token) const;

    bool contains(std::string_view token) const;

    const std::string& token_of(int id) const;

    std::int64_t count_of(int id) const;

    /// Number of entries including the two specials.
    int size() const { return static_cast<int>(id_to_token_.size()); }

    int min_count() const { return min_count_; }

    static bool is_special(int id) { return id == kPadId || id == kUnkId; }

    /// Encodes a token sequence, mapping out-of-vocabulary tokens to UNK.
    std::vector<std::int32_t> encode(const std::vector<std::string>& tokens) const;

private:
    Vocabulary() = default;

    struct StringHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };

    std::unordered_map<std::string, int, StringHash, std::equal_to<>> token_to_id_;
    std::vector<std::string> id_to_token_;
    std::vector<std::int64_t> counts_;
    int min_count_ = 0;
};

/// Summary of the per-note token-count distribution. Percentiles use the
/// nearest-rank rule; the deviation is the population standard deviation.
struct CorpusStats {
    std::size_t note_count = 0;
    std::int64_t total_words = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
};

/// Throws ConfigError on an empty corpus.
CorpusStats corpus_stats(const std::vector<TokenizedNote>& notes);

/// Flat key=value report, one stat per line.
std::string format_stats_report(const CorpusStats& stats);

/// Writes `token<TAB>count` lines for every non-special token, sorted by
/// descending count with lexicographic tie-break. Throws IoError on failure.
void export_frequencies(const Vocabulary& vocab, const std::filesystem::path& path);

/// Reads the TSV written by export_frequencies.
std::vector<std::pair<std::string, std::int64_t>> read_frequencies(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Corpus file formats.
//
// CSV input: UTF-8, RFC-4180 quoting, header `note_id,agent_id,lead_label,text`
// with lead_label one of "high", "low" or empty. Plain-text input: one note
// per line, ids assigned from 1-based line numbers. Tokenized notes travel as
// TSV with four columns `note_id<TAB>agent_id<TAB>lead_label<TAB>tokens`,
// tokens space-joined.
// ---------------------------------------------------------------------------

std::vector<RawNote> read_corpus_csv(const std::filesystem::path& path);

std::vector<RawNote> read_corpus_lines(const std::filesystem::path& path);

/// CSV when the first line matches the expected header, plain text otherwise.
std::vector<RawNote> read_corpus_auto(const std::filesystem::path& path);

void write_notes_tsv(const std::vector<TokenizedNote>& notes, const std::filesystem::path& path);

std::vector<TokenizedNote> read_notes_tsv(const std::filesystem::path& path);

const char* lead_label_name(LeadLabel label);  // "", "low", "high"

std::optional<LeadLabel> parse_lead_label(std::string_view text);

}  // namespace crmtext

#endif  // CRMTEXT_CORPUS_HPP
