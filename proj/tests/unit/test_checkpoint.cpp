#include <doctest.h>

#include <cstring>
#include <random>

#include <nlohmann/json.hpp>

#include "fsdlab/checkpoint.hpp"
#include "fsdlab/errors.hpp"
#include "fsdlab/model.hpp"
#include "fsdlab/train.hpp"
#include "helpers.hpp"

using namespace fsdlab;

namespace {

ErrorKind kind_of_load(const std::string& bytes) {
    try {
        load_model_bytes(bytes);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("load unexpectedly succeeded");
    return ErrorKind::Config;
}

} // namespace

TEST_CASE("save/load round-trips scores bitwise") {
    LanguageModel m = init_model(testutil::tiny_config(61));
    const std::string bytes = save_model_bytes(m);
    LanguageModel loaded = load_model_bytes(bytes);

    std::mt19937_64 rng(71);
    for (int i = 0; i < 10; ++i) {
        TokenSeq seq = m.encode_text(testutil::random_text(rng));
        CHECK(token_logprobs(m, seq) == token_logprobs(loaded, seq));
    }
    CHECK(save_model_bytes(loaded) == bytes);
}

TEST_CASE("adapters survive the round trip") {
    LanguageModel base = init_model(testutil::tiny_config(67));
    std::vector<TokenSeq> ft = {base.encode_text("adapted content here")};
    TrainConfig cfg;
    cfg.epochs = 3;
    LanguageModel tuned = finetune(base, ft, AdapterSpec{}, cfg);

    LanguageModel loaded = load_model_bytes(save_model_bytes(tuned));
    REQUIRE(loaded.adapters.has_value());
    CHECK(loaded.adapters->spec.rank == 8);
    CHECK(loaded.adapters->spec.targets ==
          std::vector<std::string>{"attn_q", "attn_v"});
    TokenSeq probe = base.encode_text("probe text");
    CHECK(token_logprobs(tuned, probe) == token_logprobs(loaded, probe));
}

TEST_CASE("corrupted magic bytes are rejected") {
    LanguageModel m = init_model(testutil::tiny_config(73));
    std::string bytes = save_model_bytes(m);
    bytes[0] = 'X';
    CHECK(kind_of_load(bytes) == ErrorKind::BadMagic);
}

TEST_CASE("unknown format version is rejected") {
    LanguageModel m = init_model(testutil::tiny_config(79));
    std::string bytes = save_model_bytes(m);
    bytes[6] = 9; // version u32 LE starts right after the 6-byte magic
    CHECK(kind_of_load(bytes) == ErrorKind::BadVersion);
}

TEST_CASE("every truncated prefix fails cleanly with a truncation error") {
    LanguageModel m = init_model(testutil::tiny_config(83));
    const std::string bytes = save_model_bytes(m);
    std::mt19937_64 rng(97);
    std::vector<size_t> cuts = {0, 1, 5, 6, 9, 10, 17, 18};
    for (int i = 0; i < 40; ++i) cuts.push_back(rng() % bytes.size());
    for (size_t cut : cuts) {
        CHECK(kind_of_load(bytes.substr(0, cut)) == ErrorKind::Truncated);
    }
}

TEST_CASE("manifest shape disagreement is a distinct error") {
    LanguageModel m = init_model(testutil::tiny_config(89));
    const std::string bytes = save_model_bytes(m);

    uint64_t header_len = 0;
    std::memcpy(&header_len, bytes.data() + 10, 8);
    const std::string header = bytes.substr(18, header_len);
    auto j = nlohmann::json::parse(header);
    j["tensors"][0]["shape"] = {1, 2};
    const std::string new_header = j.dump();

    std::string tampered = bytes.substr(0, 10);
    uint64_t new_len = new_header.size();
    tampered.append(reinterpret_cast<const char*>(&new_len), 8);
    tampered += new_header;
    tampered += bytes.substr(18 + header_len);
    CHECK(kind_of_load(tampered) == ErrorKind::ShapeMismatch);
}

TEST_CASE("trailing bytes after the last tensor are rejected") {
    LanguageModel m = init_model(testutil::tiny_config(91));
    std::string bytes = save_model_bytes(m);
    bytes += "junk";
    CHECK(kind_of_load(bytes) == ErrorKind::Parse);
}

TEST_CASE("file-level io errors are distinct") {
    CHECK_THROWS_AS(load_model("/nonexistent/path/model.bin"), Error);
    try {
        load_model("/nonexistent/path/model.bin");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
    }
}
