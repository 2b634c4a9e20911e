#include "crmtext/corpus.hpp"

#include <locale.h>
#include <wctype.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace crmtext {

namespace {

// Wide-character classification and case mapping need a UTF-8 locale; the C
// locale only covers ASCII. Created once, never freed.
locale_t ctype_locale() {
    static locale_t loc = [] {
        locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(0));
        if (!l) l = newlocale(LC_CTYPE_MASK, "en_US.UTF-8", static_cast<locale_t>(0));
        if (!l) throw ConfigError("no UTF-8 locale available for text normalization");
        return l;
    }();
    return loc;
}

// Decodes one code point starting at s[i], advancing i. Returns false for
// invalid sequences, consuming a single byte.
bool decode_utf8(std::string_view s, std::size_t& i, char32_t& cp) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        cp = b0;
        ++i;
        return true;
    }
    int len = 0;
    char32_t acc = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; acc = b0 & 0x1Fu; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; acc = b0 & 0x0Fu; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; acc = b0 & 0x07u; }
    else { ++i; return false; }
    if (i + len > s.size()) { ++i; return false; }
    for (int k = 1; k < len; ++k) {
        unsigned char b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) { ++i; return false; }
        acc = (acc << 6) | (b & 0x3Fu);
    }
    // Reject overlong encodings and surrogates.
    static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (acc < kMin[len] || acc > 0x10FFFF || (acc >= 0xD800 && acc <= 0xDFFF)) {
        ++i;
        return false;
    }
    cp = acc;
    i += static_cast<std::size_t>(len);
    return true;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("failed reading " + path.string());
    return std::move(ss).str();
}

std::string_view strip_bom(std::string_view s) {
    if (s.size() >= 3 && s.substr(0, 3) == "\xEF\xBB\xBF") return s.substr(3);
    return s;
}

void check_id_field(const std::string& value, const char* field, const std::string& note_id) {
    if (value.find_first_of("\t\n\r") != std::string::npos)
        throw ParseError(std::string(field) + " contains tab or newline (note " + note_id + ")");
}

constexpr std::string_view kCsvHeader = "note_id,agent_id,lead_label,text";

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) s.push_back(' ');
        s += tokens[i];
    }
    return s;
}

}  // namespace

std::string normalize_text(std::string_view raw, TextLocale locale) {
    locale_t loc = ctype_locale();
    std::string out;
    out.reserve(raw.size());
    bool pending_gap = false;
    std::size_t i = 0;
    while (i < raw.size()) {
        char32_t cp = 0;
        bool valid = decode_utf8(raw, i, cp);
        if (!valid || !iswalnum_l(static_cast<wint_t>(cp), loc)) {
            pending_gap = true;
            continue;
        }
        char32_t lower;
        if (locale == TextLocale::turkish && cp == U'I')
            lower = 0x0131;  // dotless i
        else
            lower = static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
        if (pending_gap && !out.empty()) out.push_back(' ');
        pending_gap = false;
        append_utf8(out, lower);
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view normalized) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < normalized.size()) {
        while (i < normalized.size() && std::isspace(static_cast<unsigned char>(normalized[i]))) ++i;
        std::size_t start = i;
        while (i < normalized.size() && !std::isspace(static_cast<unsigned char>(normalized[i]))) ++i;
        if (i > start) tokens.emplace_back(normalized.substr(start, i - start));
    }
    return tokens;
}

std::vector<TokenizedNote> tokenize_notes(const std::vector<RawNote>& notes, TextLocale locale) {
    std::vector<TokenizedNote> out;
    out.reserve(notes.size());
    for (const RawNote& raw : notes) {
        out.push_back(TokenizedNote{raw.note_id, raw.agent_id, raw.lead,
                                    tokenize(normalize_text(raw.text, locale))});
    }
    return out;
}

std::vector<TokenizedNote> filter_notes(std::vector<TokenizedNote> notes, FilterBounds bounds) {
    if (bounds.min_wc < 0 || bounds.min_wc > bounds.max_wc)
        throw ConfigError("invalid word-count bounds [" + std::to_string(bounds.min_wc) + ", " +
                          std::to_string(bounds.max_wc) + "]");
    std::erase_if(notes, [&](const TokenizedNote& n) {
        int wc = static_cast<int>(n.tokens.size());
        return wc < bounds.min_wc || wc > bounds.max_wc;
    });
    return notes;
}

std::vector<TokenizedNote> dedup_notes(std::vector<TokenizedNote> notes) {
    // Tokens contain no whitespace, so the space-joined sequence is a
    // collision-free key.
    std::unordered_set<std::string> seen;
    std::erase_if(notes, [&](const TokenizedNote& n) { return !seen.insert(join_tokens(n.tokens)).second; });
    return notes;
}

const std::string& Vocabulary::pad_token() {
    static const std::string tok = "<PAD>";
    return tok;
}

const std::string& Vocabulary::unk_token() {
    static const std::string tok = "<UNK>";
    return tok;
}

Vocabulary Vocabulary::build(const std::vector<TokenizedNote>& notes, int min_count) {
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    if (notes.empty()) throw ConfigError("cannot build vocabulary from an empty corpus");

    std::unordered_map<std::string, std::int64_t> counts;
    std::int64_t total = 0;
    for (const TokenizedNote& note : notes) {
        for (const std::string& tok : note.tokens) {
            ++counts[tok];
            ++total;
        }
    }
    if (total == 0) throw ConfigError("cannot build vocabulary from a corpus with no tokens");

    std::vector<std::pair<std::string, std::int64_t>> kept;
    kept.reserve(counts.size());
    for (auto& [tok, count] : counts)
        if (count >= min_count) kept.emplace_back(tok, count);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });

    Vocabulary vocab;
    vocab.min_count_ = min_count;
    vocab.id_to_token_ = {pad_token(), unk_token()};
    vocab.counts_ = {0, 0};
    vocab.id_to_token_.reserve(kept.size() + kNumSpecials);
    vocab.counts_.reserve(kept.size() + kNumSpecials);
    for (auto& [tok, count] : kept) {
        vocab.id_to_token_.push_back(tok);
        vocab.counts_.push_back(count);
    }
    vocab.token_to_id_.reserve(vocab.id_to_token_.size());
    for (int id = 0; id < static_cast<int>(vocab.id_to_token_.size()); ++id)
        vocab.token_to_id_.emplace(vocab.id_to_token_[id], id);
    return vocab;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens_in_id_order) {
    if (tokens_in_id_order.size() < kNumSpecials)
        throw ParseError("vocabulary must contain at least the PAD and UNK entries");
    if (tokens_in_id_order[kPadId] != pad_token() || tokens_in_id_order[kUnkId] != unk_token())
        throw ParseError("vocabulary must start with " + pad_token() + " and " + unk_token());

    Vocabulary vocab;
    vocab.min_count_ = 0;
    vocab.id_to_token_ = tokens_in_id_order;
    vocab.counts_.assign(tokens_in_id_order.size(), 0);
    vocab.token_to_id_.reserve(tokens_in_id_order.size());
    for (int id = 0; id < static_cast<int>(tokens_in_id_order.size()); ++id) {
        auto [it, inserted] = vocab.token_to_id_.emplace(tokens_in_id_order[id], id);
        if (!inserted) throw ParseError("duplicate vocabulary token '" + tokens_in_id_order[id] + "'");
    }
    return vocab;
}

int Vocabulary::id_of(std::string_view token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
    return token_to_id_.find(token) != token_to_id_.end();
}

const std::string& Vocabulary::token_of(int id) const {
    if (id < 0 || id >= size()) throw ConfigError("token id " + std::to_string(id) + " out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
}

std::int64_t Vocabulary::count_of(int id) const {
    if (id < 0 || id >= size()) throw ConfigError("token id " + std::to_string(id) + " out of range");
    return counts_[static_cast<std::size_t>(id)];
}

std::vector<std::int32_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<std::int32_t> ids;
    ids.reserve(tokens.size());
    for (const std::string& tok : tokens) ids.push_back(id_of(tok));
    return ids;
}

CorpusStats corpus_stats(const std::vector<TokenizedNote>& notes) {
    if (notes.empty()) throw ConfigError("corpus_stats: empty corpus");

    std::vector<std::int64_t> counts;
    counts.reserve(notes.size());
    std::int64_t total = 0;
    for (const TokenizedNote& n : notes) {
        counts.push_back(static_cast<std::int64_t>(n.tokens.size()));
        total += counts.back();
    }
    double n = static_cast<double>(counts.size());
    double mean = static_cast<double>(total) / n;
    double ss = 0.0;
    for (std::int64_t c : counts) {
        double d = static_cast<double>(c) - mean;
        ss += d * d;
    }
    std::sort(counts.begin(), counts.end());
    auto nearest_rank = [&](double pct) {
        auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
        if (rank < 1) rank = 1;
        return static_cast<double>(counts[rank - 1]);
    };

    CorpusStats stats;
    stats.note_count = notes.size();
    stats.total_words = total;
    stats.mean = mean;
    stats.stddev = std::sqrt(ss / n);
    stats.p25 = nearest_rank(25.0);
    stats.p50 = nearest_rank(50.0);
    stats.p75 = nearest_rank(75.0);
    return stats;
}

std::string format_stats_report(const CorpusStats& stats) {
    char buf[256];
    std::string out;
    out += "count=" + std::to_string(stats.note_count) + "\n";
    out += "total_words=" + std::to_string(stats.total_words) + "\n";
    auto add = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%s=%.6g\n", key, v);
        out += buf;
    };
    add("mean", stats.mean);
    add("std", stats.stddev);
    add("p25", stats.p25);
    add("p50", stats.p50);
    add("p75", stats.p75);
    return out;
}

void export_frequencies(const Vocabulary& vocab, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    // Ids are already ordered by descending count with lexicographic
    // tie-break, so emitting in id order preserves the sort.
    for (int id = Vocabulary::kNumSpecials; id < vocab.size(); ++id)
        out << vocab.token_of(id) << '\t' << vocab.count_of(id) << '\n';
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::pair<std::string, std::int64_t>> read_frequencies(const std::filesystem::path& path) {
    std::string content = read_file(path);
    std::vector<std::pair<std::string, std::int64_t>> out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        std::string_view line(content.data() + pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos)
            throw ParseError("frequency file " + path.string() + ": missing tab on line " +
                             std::to_string(line_no));
        std::int64_t count = 0;
        try {
            count = std::stoll(std::string(line.substr(tab + 1)));
        } catch (const std::exception&) {
            throw ParseError("frequency file " + path.string() + ": bad count on line " +
                             std::to_string(line_no));
        }
        out.emplace_back(std::string(line.substr(0, tab)), count);
    }
    return out;
}

// --- corpus file formats ----------------------------------------------------

namespace {

// RFC-4180 field splitter: quoted fields may contain commas, escaped quotes
// ("") and newlines. Records are separated by LF or CRLF.
std::vector<std::vector<std::string>> parse_csv(std::string_view text, const std::string& name) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    std::size_t line = 1;
    bool in_quotes = false;
    bool field_started = false;
    bool record_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
        record_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_started)
                    throw ParseError(name + ": unexpected quote mid-field on line " + std::to_string(line));
                in_quotes = true;
                field_started = true;
                record_started = true;
                break;
            case ',':
                end_field();
                record_started = true;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;  // consumed with the LF
                field.push_back(c);
                break;
            case '\n':
                if (record_started || field_started || !field.empty() || !record.empty()) end_record();
                ++line;
                break;
            default:
                field.push_back(c);
                field_started = true;
                record_started = true;
        }
    }
    if (in_quotes) throw ParseError(name + ": unterminated quoted field at end of file");
    if (record_started || !record.empty() || !field.empty()) end_record();
    return records;
}

}  // namespace

const char* lead_label_name(LeadLabel label) {
    switch (label) {
        case LeadLabel::low: return "low";
        case LeadLabel::high: return "high";
        default: return "";
    }
}

std::optional<LeadLabel> parse_lead_label(std::string_view text) {
    if (text.empty()) return LeadLabel::none;
    if (text == "low") return LeadLabel::low;
    if (text == "high") return LeadLabel::high;
    return std::nullopt;
}

std::vector<RawNote> read_corpus_csv(const std::filesystem::path& path) {
    std::string content = read_file(path);
    auto records = parse_csv(strip_bom(content), path.string());
    if (records.empty()) throw ParseError(path.string() + ": missing header row");

    {
        std::string joined;
        for (std::size_t i = 0; i < records[0].size(); ++i) {
            if (i) joined.push_back(',');
            joined += records[0][i];
        }
        if (joined != kCsvHeader)
            throw ParseError(path.string() + ": expected header '" + std::string(kCsvHeader) +
                             "', got '" + joined + "'");
    }

    std::vector<RawNote> notes;
    notes.reserve(records.size() - 1);
    std::unordered_set<std::string> seen_ids;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() != 4)
            throw ParseError(path.string() + ": record " + std::to_string(r) + " has " +
                             std::to_string(rec.size()) + " fields, expected 4");
        auto label = parse_lead_label(rec[2]);
        if (!label)
            throw ParseError(path.string() + ": record " + std::to_string(r) +
                             " has invalid lead_label '" + rec[2] + "'");
        if (!seen_ids.insert(rec[0]).second)
            throw ParseError(path.string() + ": duplicate note_id '" + rec[0] + "'");
        check_id_field(rec[0], "note_id", rec[0]);
        check_id_field(rec[1], "agent_id", rec[0]);
        notes.push_back(RawNote{rec[0], rec[1], *label, rec[3]});
    }
    return notes;
}

std::vector<RawNote> read_corpus_lines(const std::filesystem::path& path) {
    std::string content = read_file(path);
    std::string_view text = strip_bom(content);
    std::vector<RawNote> notes;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::size_t len = (eol == std::string_view::npos ? text.size() : eol) - pos;
        std::string_view line = text.substr(pos, len);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        notes.push_back(RawNote{std::to_string(line_no), "", LeadLabel::none, std::string(line)});
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return notes;
}

std::vector<RawNote> read_corpus_auto(const std::filesystem::path& path) {
    std::string content = read_file(path);
    std::string_view text = strip_bom(content);
    std::size_t eol = text.find_first_of("\r\n");
    std::string_view first = text.substr(0, eol == std::string_view::npos ? text.size() : eol);
    if (first == kCsvHeader) return read_corpus_csv(path);
    return read_corpus_lines(path);
}

void write_notes_tsv(const std::vector<TokenizedNote>& notes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const TokenizedNote& n : notes) {
        check_id_field(n.note_id, "note_id", n.note_id);
        check_id_field(n.agent_id, "agent_id", n.note_id);
        out << n.note_id << '\t' << n.agent_id << '\t' << lead_label_name(n.lead) << '\t'
            << join_tokens(n.tokens) << '\n';
    }
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<TokenizedNote> read_notes_tsv(const std::filesystem::path& path) {
    std::string content = read_file(path);
    std::vector<TokenizedNote> notes;
    std::unordered_set<std::string> seen_ids;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        std::size_t eol = content.find('\n', pos);
        std::size_t len = (eol == std::string::npos ? content.size() : eol) - pos;
        std::string_view line(content.data() + pos, len);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = (eol == std::string::npos) ? content.size() : eol + 1;
        ++line_no;
        if (line.empty()) continue;

        std::array<std::string_view, 4> fields;
        std::size_t start = 0;
        int nf = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                if (nf >= 4)
                    throw ParseError(path.string() + ": too many fields on line " + std::to_string(line_no));
                fields[static_cast<std::size_t>(nf++)] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (nf != 4)
            throw ParseError(path.string() + ": expected 4 tab-separated fields on line " +
                             std::to_string(line_no));
        auto label = parse_lead_label(fields[2]);
        if (!label)
            throw ParseError(path.string() + ": invalid lead_label '" + std::string(fields[2]) +
                             "' on line " + std::to_string(line_no));
        if (!seen_ids.insert(std::string(fields[0])).second)
            throw ParseError(path.string() + ": duplicate note_id '" + std::string(fields[0]) +
                             "' on line " + std::to_string(line_no));
        notes.push_back(TokenizedNote{std::string(fields[0]), std::string(fields[1]), *label,
                                      tokenize(fields[3])});
    }
    return notes;
}

}  // namespace crmtext
