#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include "fsdlab/corpus.hpp"
#include "fsdlab/errors.hpp"
#include "fsdlab/text.hpp"

using namespace fsdlab;

namespace {

std::vector<int> regex_years(const std::string& text) {
    static const std::regex year_re("(19|20)[0-9]{2}");
    std::vector<int> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), year_re);
         it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        const size_t b = static_cast<size_t>(m.position());
        const size_t e = b + 4;
        auto alnum = [&](size_t i) {
            return std::isalnum(static_cast<unsigned char>(text[i])) != 0;
        };
        if ((b > 0 && alnum(b - 1)) || (e < text.size() && alnum(e))) continue;
        out.push_back(std::stoi(m.str()));
    }
    return out;
}

CorpusConfig small_config() {
    CorpusConfig cfg;
    cfg.n_members = 40;
    cfg.n_nonmembers = 30;
    cfg.seed = 99;
    return cfg;
}

} // namespace

TEST_CASE("generation is deterministic and respects counts") {
    CorpusConfig cfg = small_config();
    LabeledDataset a = generate(cfg);
    LabeledDataset b = generate(cfg);
    REQUIRE(a.size() == 70);
    CHECK(a.count(Label::Member) == 40);
    CHECK(a.count(Label::NonMember) == 30);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a.examples[i].text == b.examples[i].text);
        CHECK(a.examples[i].id == b.examples[i].id);
        CHECK(a.examples[i].label == b.examples[i].label);
        CHECK(a.examples[i].text.size() <= cfg.max_len);
    }
    a.validate();

    CorpusConfig empty = cfg;
    empty.n_members = 0;
    empty.n_nonmembers = 0;
    CHECK(generate(empty).size() == 0);
}

TEST_CASE("temporal shift partitions years by class") {
    CorpusConfig cfg = small_config();
    LabeledDataset ds = generate(cfg);
    for (const auto& ex : ds.examples) {
        const auto years = regex_years(ex.text);
        CHECK(!years.empty());
        for (int y : years) {
            if (ex.label == Label::Member) {
                CHECK(y >= cfg.member_years.lo);
                CHECK(y <= cfg.member_years.hi);
            } else {
                CHECK(y >= cfg.nonmember_years.lo);
                CHECK(y <= cfg.nonmember_years.hi);
            }
        }
    }

    CorpusConfig merged = cfg;
    merged.temporal_shift = false;
    LabeledDataset union_ds = generate(merged);
    for (const auto& ex : union_ds.examples)
        for (int y : regex_years(ex.text)) {
            CHECK(y >= cfg.member_years.lo);
            CHECK(y <= cfg.nonmember_years.hi);
        }
}

TEST_CASE("config validation rejects inconsistent settings") {
    CorpusConfig cfg = small_config();
    cfg.nonmember_years = {2020, 2022}; // overlaps member range
    CHECK_THROWS_AS(generate(cfg), Error);

    CorpusConfig lens = small_config();
    lens.min_len = 100;
    lens.max_len = 50;
    CHECK_THROWS_AS(generate(lens), Error);

    CorpusConfig merged = small_config();
    merged.temporal_shift = false;
    merged.nonmember_years = {2015, 2020}; // overlap fine without shift
    CHECK_NOTHROW(generate(merged));
}

TEST_CASE("builtin template pool matches the shipped asset byte for byte") {
    std::ifstream in(std::string(FSDLAB_DATA_DIR) + "/templates/events.txt",
                     std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == builtin_events_pool());
}

TEST_CASE("custom template pools load from plain files") {
    const std::string path = "/tmp/fsdlab_test_pool.txt";
    {
        std::ofstream out(path);
        out << "The {YEAR} {EVENT} happened in {CITY}.\n\n";
        out << "{PERSON} visited {CITY} on {DAY} {MONTH} {YEAR}.\n";
    }
    TemplatePool pool = load_template_pool(path);
    CHECK(pool.lines.size() == 2);

    CorpusConfig cfg = small_config();
    cfg.template_pool = path;
    LabeledDataset ds = generate(cfg);
    CHECK(ds.size() == 70);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_template_pool("/nonexistent/pool.txt"), Error);
}

TEST_CASE("unknown placeholders are reported") {
    const std::string path = "/tmp/fsdlab_bad_pool.txt";
    {
        std::ofstream out(path);
        out << "The {BOGUS} of {YEAR}.\n";
    }
    CorpusConfig cfg = small_config();
    cfg.template_pool = path;
    CHECK_THROWS_AS(generate(cfg), Error);
    std::remove(path.c_str());
}

TEST_CASE("deletion reproduces the reference sample") {
    CHECK(transform_deletion("held on March 12, 2023, at the Dolby Theatre") ==
          "held at the Dolby Theatre");
    CHECK(transform_deletion(
              "The 95th Academy Awards was a ceremony held by the Academy of "
              "Motion Picture Arts and Sciences on March 12, 2023, at the "
              "Dolby Theatre in Los Angeles.") ==
          "The 95th Academy Awards was a ceremony held by the Academy of "
          "Motion Picture Arts and Sciences at the Dolby Theatre in Los "
          "Angeles.");
}

TEST_CASE("deletion handles year-only and edge placements") {
    CHECK(transform_deletion("The 2023 Summer Festival is ongoing") ==
          "The Summer Festival is ongoing");
    CHECK(transform_deletion("2014 saw many churches restored") ==
          "saw many churches restored");
    CHECK(transform_deletion("In 2014, a series of meetings was held") ==
          "a series of meetings was held");
    CHECK(transform_deletion("no years at all here") ==
          "no years at all here");
    CHECK(transform_deletion("commemorated in August 2014.") ==
          "commemorated");
}

TEST_CASE("deletion is idempotent and removes every year") {
    LabeledDataset ds = generate(small_config());
    for (const auto& ex : ds.examples) {
        const std::string once = transform_deletion(ex.text);
        CHECK(regex_years(once).empty());
        CHECK(transform_deletion(once) == once);
    }
}

TEST_CASE("replacement rewrites years in place") {
    CHECK(transform_replacement(
              "The 2014 European Aquatics Championships took place from 13 to "
              "24 August 2014 in Berlin, Germany.") ==
          "The 2023 European Aquatics Championships took place from 13 to 24 "
          "August 2023 in Berlin, Germany.");
    CHECK(transform_replacement("no years here") == "no years here");
    CHECK(transform_replacement("already 2023 stays", 2023) ==
          "already 2023 stays");
    CHECK(transform_replacement("pick 1999", 1901) == "pick 1901");
    CHECK_THROWS_AS(transform_replacement("x 2000 y", 99), Error);
}

TEST_CASE("replacement preserves byte length for 4-digit targets") {
    LabeledDataset ds = generate(small_config());
    for (const auto& ex : ds.examples) {
        CHECK(transform_replacement(ex.text).size() == ex.text.size());
        for (int y : regex_years(transform_replacement(ex.text)))
            CHECK(y == 2023);
    }
}

TEST_CASE("transforms commute with lowercasing on ASCII text") {
    LabeledDataset ds = generate(small_config());
    for (size_t i = 0; i < ds.size(); i += 5) {
        const std::string& text = ds.examples[i].text;
        CHECK(simple_lowercase(transform_deletion(text)) ==
              transform_deletion(simple_lowercase(text)));
        CHECK(simple_lowercase(transform_replacement(text)) ==
              transform_replacement(simple_lowercase(text)));
    }
}

TEST_CASE("jsonl round-trips texts and labels with positional ids") {
    const std::string path = "/tmp/fsdlab_test_ds.jsonl";
    LabeledDataset ds = generate(small_config());
    save_jsonl(ds, path);
    LabeledDataset loaded = load_jsonl(path);
    REQUIRE(loaded.size() == ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        CHECK(loaded.examples[i].text == ds.examples[i].text);
        CHECK(loaded.examples[i].label == ds.examples[i].label);
        CHECK(loaded.examples[i].id == ds.examples[i].id); // both positional
    }
    std::remove(path.c_str());
}

TEST_CASE("jsonl loader reports malformed lines precisely") {
    const std::string path = "/tmp/fsdlab_bad_ds.jsonl";

    auto expect_kind = [&](const std::string& content, ErrorKind kind,
                           const char* needle) {
        std::ofstream(path) << content;
        try {
            load_jsonl(path);
            FAIL_CHECK("expected load failure for: " << content);
        } catch (const Error& e) {
            CHECK(e.kind() == kind);
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    expect_kind("{\"input\":\"ok\",\"label\":1}\n{\"input\":\"x\"}\n",
                ErrorKind::Parse, "line 2");
    expect_kind("{\"input\":\"x\",\"label\":2}\n", ErrorKind::Config,
                "label");
    expect_kind("not json at all\n", ErrorKind::Parse, "line 1");
    expect_kind("{\"input\":\"\",\"label\":0}\n", ErrorKind::Config, "empty");
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_jsonl("/nonexistent/data.jsonl"), Error);

    // extra fields are tolerated for WikiMIA-style files
    std::ofstream(path) << "{\"input\":\"x\",\"label\":0,\"extra\":true}\n";
    CHECK(load_jsonl(path).size() == 1);
    std::remove(path.c_str());
}
