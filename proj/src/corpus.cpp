#include "fsdlab/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "fsdlab/errors.hpp"
#include "fsdlab/rng.hpp"
#include "fsdlab/text.hpp"

namespace fsdlab {

namespace {

using nlohmann::json;

const char* kEventsPool =
    "The {YEAR} {EVENT} took place in {CITY}, {COUNTRY}, drawing {COUNT} spectators on {DAY} {MONTH} {YEAR}.\n"
    "The {ORDINAL} {EVENT}, attended by {COUNT} delegates, was held by the {ORG} at the {VENUE} in {CITY} on {MONTH} {DAY}, {YEAR}.\n"
    "{PERSON} announced a partnership with the {ORG} at a summit in {CITY} attended by {COUNT} delegates on {MONTH} {DAY}, {YEAR}.\n"
    "A series of diplomatic meetings was held between {PERSON} and representatives of the {ORG} in {CITY} in {MONTH} {YEAR}.\n"
    "The {YEAR} {EVENT} was commemorated across {COUNTRY}, drawing {COUNT} delegations to {CITY}, in {MONTH} {YEAR}.\n"
    "The {YEAR} {EVENT} was the {ORDINAL} edition of the annual gathering in {CITY}, held on {MONTH} {DAY}, {YEAR}.\n"
    "A report issued by the {ORG} examined the {YEAR} {EVENT} in {COUNTRY} in {MONTH} {YEAR}.\n"
    "{PERSON} led the {ORG} delegation of {COUNT} athletes to the {YEAR} {EVENT}, which opened in {CITY} on {DAY} {MONTH} {YEAR}.\n"
    "The {YEAR} {EVENT}, organised by the {ORG}, returned to the {VENUE} in {CITY} on {MONTH} {DAY}, {YEAR}.\n"
    "Construction of the {VENUE} in {CITY} concluded ahead of the {YEAR} {EVENT} in {MONTH} {YEAR}.\n"
    "The {ORG} convened an emergency session in {CITY} following the {YEAR} {EVENT} on {MONTH} {DAY}, {YEAR}.\n"
    "During the {YEAR} {EVENT} in {CITY}, {PERSON} set a record before {COUNT} spectators on {DAY} {MONTH} {YEAR}.\n"
    "The {ORDINAL} {EVENT} concluded in {CITY}, {COUNTRY}, with a closing address by {PERSON} on {DAY} {MONTH} {YEAR}.\n"
    "An exhibition devoted to the {YEAR} {EVENT} opened at the {VENUE} in {CITY}, with {COUNT} works on display, in {MONTH} {YEAR}.\n";

const std::array<const char*, 20> kEventAdjectives = {
    "European",  "Asian",     "Continental",  "National",  "International",
    "Pacific",   "Northern",  "Southern",     "Global",    "Regional",
    "Atlantic",  "Alpine",    "Nordic",       "Coastal",   "Highland",
    "Metropolitan", "Provincial", "Eastern",  "Western",   "Baltic"};

const std::array<const char*, 20> kEventNouns = {
    "Aquatics Championships", "Film Festival",     "Chess Open",
    "Robotics Expo",          "Jazz Festival",     "Marathon",
    "Literature Prize",       "Design Biennale",   "Science Fair",
    "Debate Tournament",      "Culinary Summit",   "Photography Awards",
    "Astronomy Congress",     "Sailing Regatta",   "Archery Cup",
    "History Symposium",      "Innovation Forum",  "Ceramics Fair",
    "Cycling Classic",        "Choir Competition"};

const std::array<const char*, 16> kOrgs = {
    "Academy of Motion Picture Arts", "United Nations",
    "International Olympic Committee", "World Health Assembly",
    "Royal Geographical Society",      "National Science Board",
    "European Broadcasting Union",     "Press Freedom Council",
    "Civil Aviation Authority",        "Museum of Modern History",
    "Chamber of Commerce",             "Planetary Research Institute",
    "Maritime Safety Agency",          "Heritage Preservation Trust",
    "Astronomical Union",              "Youth Sports Federation"};

const std::array<const char*, 12> kVenues = {
    "Dolby Theatre",       "Microsoft Theater",      "Grand Exhibition Hall",
    "Riverside Arena",     "Crystal Pavilion",       "Harbour Convention Centre",
    "Old Town Observatory", "Velodrome",             "Opera House",
    "Botanical Conservatory", "Summit Auditorium",   "Lakeside Stadium"};

const std::array<const char*, 24> kCities = {
    "Berlin",  "Los Angeles", "Tokyo",    "Manila",   "Geneva",  "Nairobi",
    "Toronto", "Lisbon",      "Prague",   "Auckland", "Montreal", "Seoul",
    "Vienna",  "Helsinki",    "Marrakesh", "Bogota",  "Kyoto",   "Dublin",
    "Oslo",    "Valencia",    "Zurich",   "Athens",   "Cairo",   "Hanoi"};

const std::array<const char*, 18> kCountries = {
    "Germany", "Japan",   "Kenya",   "Canada",  "Portugal", "Austria",
    "Finland", "Morocco", "Colombia", "Ireland", "Norway",  "Spain",
    "Greece",  "Egypt",   "Vietnam", "Chile",   "Iceland",  "Thailand"};

const std::array<const char*, 16> kFirstNames = {
    "Wang",  "Amara", "Lukas",  "Priya", "Mateo",  "Ingrid", "Tendai", "Sofia",
    "Hiroshi", "Elena", "Omar", "Freya", "Rafael", "Mei",    "Anders", "Zainab"};

const std::array<const char*, 16> kLastNames = {
    "Yu-chi",  "Okafor",  "Lindqvist", "Raman",     "Alvarez", "Sorensen",
    "Moyo",    "Petrova", "Tanaka",    "Marino",    "Haddad",  "Bergstrom",
    "Costa",   "Lin",     "Dahl",      "Karimi"};

const std::array<const char*, 12> kMonths = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

const std::array<const char*, 12> kOrdinals = {
    "95th", "36th", "16th", "42nd", "73rd", "58th",
    "21st", "67th", "89th", "34th", "12th", "51st"};

const std::array<const char*, 12> kMonthAbbrevs = {
    "jan", "feb", "mar", "apr", "may", "jun",
    "jul", "aug", "sep", "oct", "nov", "dec"};

template <size_t N>
const char* pick(const std::array<const char*, N>& pool, Rng& rng) {
    return pool[static_cast<size_t>(rng.bounded(N))];
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    return out;
}

// Fills one template line. Placeholder draws are memoized per sentence so
// a repeated {YEAR} names the same year both times.
std::string fill_template(const std::string& tpl, const YearRange& years,
                          Rng& rng) {
    std::unordered_map<std::string, std::string> memo;
    auto value_for = [&](const std::string& name) -> std::string {
        auto it = memo.find(name);
        if (it != memo.end()) return it->second;
        std::string value;
        if (name == "EVENT") {
            value = std::string(pick(kEventAdjectives, rng)) + " " +
                    pick(kEventNouns, rng);
        } else if (name == "ORG") {
            value = pick(kOrgs, rng);
        } else if (name == "VENUE") {
            value = pick(kVenues, rng);
        } else if (name == "CITY") {
            value = pick(kCities, rng);
        } else if (name == "COUNTRY") {
            value = pick(kCountries, rng);
        } else if (name == "PERSON") {
            value = std::string(pick(kFirstNames, rng)) + " " +
                    pick(kLastNames, rng);
        } else if (name == "MONTH") {
            value = pick(kMonths, rng);
        } else if (name == "ORDINAL") {
            value = pick(kOrdinals, rng);
        } else if (name == "YEAR") {
            const int span = years.hi - years.lo + 1;
            value = std::to_string(
                years.lo + static_cast<int>(rng.bounded(
                               static_cast<uint64_t>(span))));
        } else if (name == "COUNT") {
            // comma-grouped thousands; never matches the year pattern
            const int count = 1000 + static_cast<int>(rng.bounded(9000));
            value = std::to_string(count / 1000) + "," +
                    std::to_string(count % 1000 + 1000).substr(1);
        } else if (name == "DAY") {
            value = std::to_string(1 + static_cast<int>(rng.bounded(27)));
        } else if (name == "DAY2") {
            auto dit = memo.find("DAY");
            int day = 0;
            if (dit != memo.end()) day = std::stoi(dit->second);
            const int remaining = 28 - day;
            value = std::to_string(
                day + 1 + static_cast<int>(rng.bounded(
                              static_cast<uint64_t>(remaining))));
        } else {
            raise(ErrorKind::Config,
                  "unknown template placeholder '{" + name + "}'");
        }
        memo.emplace(name, value);
        return value;
    };

    std::string out;
    out.reserve(tpl.size() + 64);
    size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            const size_t close = tpl.find('}', i + 1);
            if (close == std::string::npos)
                raise(ErrorKind::Config, "unterminated placeholder in template");
            out += value_for(tpl.substr(i + 1, close - i - 1));
            i = close + 1;
        } else {
            out.push_back(tpl[i]);
            ++i;
        }
    }
    return out;
}

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view strip_punct(std::string_view token) {
    size_t b = 0;
    size_t e = token.size();
    auto is_word_char = [](char c) {
        return is_ascii_digit(c) || (c >= 'a' && c <= 'z') ||
               (c >= 'A' && c <= 'Z');
    };
    while (b < e && !is_word_char(token[b])) ++b;
    while (e > b && !is_word_char(token[e - 1])) --e;
    return token.substr(b, e - b);
}

bool core_is_year(std::string_view core) {
    if (core.size() != 4) return false;
    for (char c : core)
        if (!is_ascii_digit(c)) return false;
    const int value = (core[0] - '0') * 1000 + (core[1] - '0') * 100 +
                      (core[2] - '0') * 10 + (core[3] - '0');
    return value >= 1900 && value <= 2099;
}

bool core_is_day(std::string_view core) {
    if (core.empty() || core.size() > 2) return false;
    int value = 0;
    for (char c : core) {
        if (!is_ascii_digit(c)) return false;
        value = value * 10 + (c - '0');
    }
    return value >= 1 && value <= 31;
}

bool core_is_month(std::string_view core) {
    const std::string lower = ascii_lower(core);
    for (const char* m : kMonths)
        if (lower == ascii_lower(m)) return true;
    for (const char* m : kMonthAbbrevs)
        if (lower == m) return true;
    return false;
}

bool core_is_connector(std::string_view core) {
    const std::string lower = ascii_lower(core);
    return lower == "on" || lower == "in";
}

} // namespace

void CorpusConfig::validate() const {
    if (member_years.empty() || nonmember_years.empty())
        raise(ErrorKind::Config, "year ranges must be non-empty");
    if (temporal_shift && member_years.overlaps(nonmember_years))
        raise(ErrorKind::Config,
              "temporal_shift requires disjoint member/non-member year ranges");
    if (min_len == 0 || max_len < min_len)
        raise(ErrorKind::Config, "length bounds must satisfy 0 < min <= max");
    if (template_pool.empty())
        raise(ErrorKind::Config, "template pool id must not be empty");
}

const std::string& builtin_events_pool() {
    static const std::string pool = kEventsPool;
    return pool;
}

TemplatePool load_template_pool(const std::string& id_or_path) {
    TemplatePool pool;
    pool.id = id_or_path;
    std::string content;
    if (id_or_path == "events") {
        content = builtin_events_pool();
    } else {
        std::ifstream in(id_or_path);
        if (!in)
            raise(ErrorKind::Io,
                  "cannot open template pool '" + id_or_path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        content = ss.str();
    }
    std::istringstream lines(content);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) pool.lines.push_back(line);
    }
    if (pool.lines.empty())
        raise(ErrorKind::Config,
              "template pool '" + id_or_path + "' has no templates");
    return pool;
}

LabeledDataset generate(const CorpusConfig& cfg) {
    cfg.validate();
    const TemplatePool pool = load_template_pool(cfg.template_pool);
    Rng rng(cfg.seed);

    const YearRange union_range{
        std::min(cfg.member_years.lo, cfg.nonmember_years.lo),
        std::max(cfg.member_years.hi, cfg.nonmember_years.hi)};

    LabeledDataset ds;
    ds.provenance = "synthetic(pool=" + cfg.template_pool +
                    ", seed=" + std::to_string(cfg.seed) + ")";
    ds.examples.reserve(cfg.n_members + cfg.n_nonmembers);

    auto make_text = [&](const YearRange& years) {
        std::string text;
        for (int attempt = 0; attempt < 16; ++attempt) {
            const std::string& tpl =
                pool.lines[static_cast<size_t>(rng.bounded(pool.lines.size()))];
            text = fill_template(tpl, years, rng);
            if (text.size() <= cfg.max_len) break;
            text.clear();
        }
        if (text.empty())
            raise(ErrorKind::Config,
                  "max_len too small for every template in the pool");
        int stalls = 0;
        while (text.size() < cfg.min_len && stalls < 4) {
            const std::string& tpl =
                pool.lines[static_cast<size_t>(rng.bounded(pool.lines.size()))];
            const std::string extra = fill_template(tpl, years, rng);
            if (text.size() + 1 + extra.size() > cfg.max_len) {
                ++stalls;
                continue;
            }
            text += " ";
            text += extra;
        }
        return text;
    };

    size_t next_id = 0;
    for (size_t i = 0; i < cfg.n_members; ++i) {
        const YearRange& years =
            cfg.temporal_shift ? cfg.member_years : union_range;
        ds.examples.push_back(
            {std::to_string(next_id++), make_text(years), Label::Member});
    }
    for (size_t i = 0; i < cfg.n_nonmembers; ++i) {
        const YearRange& years =
            cfg.temporal_shift ? cfg.nonmember_years : union_range;
        ds.examples.push_back(
            {std::to_string(next_id++), make_text(years), Label::NonMember});
    }
    return ds;
}

std::string transform_deletion(std::string_view text) {
    // Tokenize into non-whitespace runs with their following separators.
    struct Token {
        size_t begin, end;     // token bytes
        size_t sep_end;        // end of trailing whitespace run
    };
    std::vector<Token> tokens;
    size_t i = 0;
    const size_t n = text.size();
    size_t lead_end = 0;
    while (lead_end < n && std::isspace(static_cast<unsigned char>(text[lead_end])))
        ++lead_end;
    i = lead_end;
    while (i < n) {
        size_t b = i;
        while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t e = i;
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        tokens.push_back({b, e, i});
    }

    std::vector<bool> drop(tokens.size(), false);
    for (size_t t = 0; t < tokens.size(); ++t) {
        const std::string_view core =
            strip_punct(text.substr(tokens[t].begin,
                                    tokens[t].end - tokens[t].begin));
        if (!core_is_year(core)) continue;
        drop[t] = true;
        // Attached date words extend leftward: day / month tokens, then at
        // most one on/in connector heading the phrase.
        size_t p = t;
        while (p > 0) {
            const std::string_view prev_core = strip_punct(
                text.substr(tokens[p - 1].begin,
                            tokens[p - 1].end - tokens[p - 1].begin));
            if (core_is_day(prev_core) || core_is_month(prev_core)) {
                drop[p - 1] = true;
                --p;
            } else {
                break;
            }
        }
        if (p > 0 && !drop[p - 1]) {
            const std::string_view prev_core = strip_punct(
                text.substr(tokens[p - 1].begin,
                            tokens[p - 1].end - tokens[p - 1].begin));
            if (core_is_connector(prev_core)) drop[p - 1] = true;
        }
    }

    std::string out;
    out.reserve(text.size());
    out.append(text.substr(0, lead_end));
    bool pending_gap = false; // a dropped token separates the kept neighbors
    bool first_kept = true;
    for (size_t t = 0; t < tokens.size(); ++t) {
        if (drop[t]) {
            pending_gap = !first_kept;
            continue;
        }
        if (!first_kept) {
            if (pending_gap) {
                out.push_back(' ');
            } else {
                // original separator of the previous kept token
                size_t prev = t;
                do {
                    --prev;
                } while (drop[prev]);
                out.append(text.substr(tokens[prev].end,
                                       tokens[prev].sep_end - tokens[prev].end));
            }
        }
        out.append(text.substr(tokens[t].begin, tokens[t].end - tokens[t].begin));
        first_kept = false;
        pending_gap = false;
    }
    // keep the original trailing whitespace if the last token survived
    if (!tokens.empty() && !drop.back())
        out.append(text.substr(tokens.back().end,
                               tokens.back().sep_end - tokens.back().end));
    return out;
}

std::string transform_replacement(std::string_view text, int target_year) {
    if (target_year < 1000 || target_year > 9999)
        raise(ErrorKind::Config, "target_year must have four digits");
    const std::vector<YearToken> years = find_year_tokens(text);
    const std::string target = std::to_string(target_year);
    std::string out;
    out.reserve(text.size());
    size_t cursor = 0;
    for (const YearToken& y : years) {
        out.append(text.substr(cursor, y.begin - cursor));
        out.append(target);
        cursor = y.end;
    }
    out.append(text.substr(cursor));
    return out;
}

const char* to_string(TransformKind kind) {
    switch (kind) {
    case TransformKind::None: return "none";
    case TransformKind::Deletion: return "deletion";
    case TransformKind::Replacement: return "replacement";
    }
    return "unknown";
}

TransformKind transform_from_name(std::string_view name) {
    if (name == "none") return TransformKind::None;
    if (name == "deletion") return TransformKind::Deletion;
    if (name == "replacement") return TransformKind::Replacement;
    raise(ErrorKind::Config,
          "unknown transform '" + std::string(name) + "'");
}

std::string apply_transform(std::string_view text, TransformKind kind) {
    switch (kind) {
    case TransformKind::None: return std::string(text);
    case TransformKind::Deletion: return transform_deletion(text);
    case TransformKind::Replacement: return transform_replacement(text);
    }
    raise(ErrorKind::Config, "unknown transform");
}

LabeledDataset apply_transform(const LabeledDataset& dataset,
                               TransformKind kind) {
    LabeledDataset out;
    out.provenance = dataset.provenance + "+" + to_string(kind);
    out.examples.reserve(dataset.size());
    for (const auto& ex : dataset.examples)
        out.examples.push_back(
            {ex.id, apply_transform(ex.text, kind), ex.label});
    return out;
}

LabeledDataset load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Io, "cannot open '" + path + "' for reading");
    LabeledDataset ds;
    ds.provenance = path;
    std::string line;
    size_t line_no = 0;
    size_t next_id = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            raise(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                        ": malformed JSON: " + e.what());
        }
        if (!j.is_object() || !j.contains("input") || !j.contains("label"))
            raise(ErrorKind::Parse,
                  "line " + std::to_string(line_no) +
                      ": object must carry 'input' and 'label'");
        if (!j["input"].is_string())
            raise(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                        ": 'input' must be a string");
        if (!j["label"].is_number_integer())
            raise(ErrorKind::Config, "line " + std::to_string(line_no) +
                                         ": 'label' must be an integer");
        const int64_t label = j["label"].get<int64_t>();
        if (label != 0 && label != 1)
            raise(ErrorKind::Config, "line " + std::to_string(line_no) +
                                         ": label must be 0 or 1, got " +
                                         std::to_string(label));
        const std::string input = j["input"].get<std::string>();
        if (input.empty())
            raise(ErrorKind::Config,
                  "line " + std::to_string(line_no) + ": empty input text");
        ds.examples.push_back({std::to_string(next_id++), input,
                               label == 1 ? Label::Member : Label::NonMember});
    }
    if (in.bad()) raise(ErrorKind::Io, "read failure on '" + path + "'");
    return ds;
}

void save_jsonl(const LabeledDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::Io, "cannot open '" + path + "' for writing");
    for (const auto& ex : dataset.examples) {
        json j{{"input", ex.text}, {"label", label_to_int(ex.label)}};
        std::string line;
        try {
            line = j.dump();
        } catch (const json::exception& e) {
            raise(ErrorKind::Config, "example '" + ex.id +
                                         "' is not valid UTF-8: " + e.what());
        }
        out << line << '\n';
    }
    out.close();
    if (!out) raise(ErrorKind::Io, "failed to finish writing '" + path + "'");
}

} // namespace fsdlab
