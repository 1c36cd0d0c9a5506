#include "fsdlab/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fsdlab/errors.hpp"

namespace fsdlab {

namespace {

using nlohmann::json;

constexpr char kMagic[6] = {'F', 'S', 'D', 'L', 'M', '\0'};

void put_u32(std::ostream& out, uint32_t value) {
    char buf[4];
    for (int i = 0; i < 4; ++i)
        buf[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    out.write(buf, 4);
}

void put_u64(std::ostream& out, uint64_t value) {
    char buf[8];
    for (int i = 0; i < 8; ++i)
        buf[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    out.write(buf, 8);
}

bool get_bytes(std::istream& in, char* buf, size_t n) {
    in.read(buf, static_cast<std::streamsize>(n));
    return static_cast<size_t>(in.gcount()) == n;
}

uint32_t parse_u32(const char* buf) {
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i)
        v = (v << 8) | static_cast<unsigned char>(buf[i]);
    return v;
}

uint64_t parse_u64(const char* buf) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i)
        v = (v << 8) | static_cast<unsigned char>(buf[i]);
    return v;
}

json config_to_json(const ModelConfig& cfg) {
    return json{{"vocab_size", cfg.vocab_size},
                {"context_len", cfg.context_len},
                {"embed_dim", cfg.embed_dim},
                {"num_layers", cfg.num_layers},
                {"num_heads", cfg.num_heads},
                {"feedforward_dim", cfg.feedforward_dim},
                {"seed", cfg.seed}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.vocab_size = j.at("vocab_size").get<int32_t>();
    cfg.context_len = j.at("context_len").get<int32_t>();
    cfg.embed_dim = j.at("embed_dim").get<int32_t>();
    cfg.num_layers = j.at("num_layers").get<int32_t>();
    cfg.num_heads = j.at("num_heads").get<int32_t>();
    cfg.feedforward_dim = j.at("feedforward_dim").get<int32_t>();
    cfg.seed = j.at("seed").get<uint64_t>();
    return cfg;
}

void write_tensor_data(std::ostream& out, const NamedTensor& t) {
    std::string buf(t.data.size() * 4, '\0');
    for (size_t i = 0; i < t.data.size(); ++i) {
        uint32_t bits;
        std::memcpy(&bits, &t.data[i], 4);
        buf[i * 4 + 0] = static_cast<char>(bits & 0xFF);
        buf[i * 4 + 1] = static_cast<char>((bits >> 8) & 0xFF);
        buf[i * 4 + 2] = static_cast<char>((bits >> 16) & 0xFF);
        buf[i * 4 + 3] = static_cast<char>((bits >> 24) & 0xFF);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void read_tensor_data(std::istream& in, NamedTensor& t) {
    std::string buf(t.data.size() * 4, '\0');
    if (!get_bytes(in, buf.data(), buf.size()))
        raise(ErrorKind::Truncated,
              "checkpoint ends inside tensor '" + t.name + "'");
    for (size_t i = 0; i < t.data.size(); ++i) {
        uint32_t bits = static_cast<unsigned char>(buf[i * 4 + 0]) |
                        (static_cast<uint32_t>(
                             static_cast<unsigned char>(buf[i * 4 + 1]))
                         << 8) |
                        (static_cast<uint32_t>(
                             static_cast<unsigned char>(buf[i * 4 + 2]))
                         << 16) |
                        (static_cast<uint32_t>(
                             static_cast<unsigned char>(buf[i * 4 + 3]))
                         << 24);
        float v;
        std::memcpy(&v, &bits, 4);
        t.data[i] = v;
    }
}

} // namespace

void save_model(const LanguageModel& model, std::ostream& out) {
    json header;
    header["config"] = config_to_json(model.config);
    if (model.adapters) {
        const AdapterSpec& spec = model.adapters->spec;
        header["adapters"] = json{{"rank", spec.rank},
                                  {"alpha", spec.alpha},
                                  {"targets", spec.targets},
                                  {"init_std", spec.init_std}};
    } else {
        header["adapters"] = nullptr;
    }
    json manifest = json::array();
    auto add_manifest = [&manifest](const NamedTensor& t) {
        manifest.push_back(json{{"name", t.name}, {"shape", t.shape}});
    };
    for (const auto& t : model.params.tensors) add_manifest(t);
    if (model.adapters)
        for (const auto& t : model.adapters->params.tensors) add_manifest(t);
    header["tensors"] = manifest;

    const std::string header_bytes = header.dump();
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, kCheckpointVersion);
    put_u64(out, header_bytes.size());
    out.write(header_bytes.data(),
              static_cast<std::streamsize>(header_bytes.size()));
    for (const auto& t : model.params.tensors) write_tensor_data(out, t);
    if (model.adapters)
        for (const auto& t : model.adapters->params.tensors)
            write_tensor_data(out, t);
    if (!out) raise(ErrorKind::Io, "failed to write checkpoint stream");
}

LanguageModel load_model(std::istream& in) {
    char magic[6];
    if (!get_bytes(in, magic, sizeof(magic)))
        raise(ErrorKind::Truncated, "checkpoint shorter than its magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        raise(ErrorKind::BadMagic, "not a model checkpoint (bad magic bytes)");

    char u32buf[4];
    if (!get_bytes(in, u32buf, 4))
        raise(ErrorKind::Truncated, "checkpoint ends before format version");
    const uint32_t version = parse_u32(u32buf);
    if (version != kCheckpointVersion)
        raise(ErrorKind::BadVersion,
              "unsupported checkpoint version " + std::to_string(version));

    char u64buf[8];
    if (!get_bytes(in, u64buf, 8))
        raise(ErrorKind::Truncated, "checkpoint ends before header length");
    const uint64_t header_len = parse_u64(u64buf);
    if (header_len > (1ull << 30))
        raise(ErrorKind::Parse, "unreasonable header length");
    std::string header_bytes(header_len, '\0');
    if (!get_bytes(in, header_bytes.data(), header_len))
        raise(ErrorKind::Truncated, "checkpoint ends inside header");

    json header;
    try {
        header = json::parse(header_bytes);
    } catch (const json::exception& e) {
        raise(ErrorKind::Parse, std::string("invalid checkpoint header: ") +
                                    e.what());
    }

    if (!header.contains("config") || !header.contains("adapters") ||
        !header.contains("tensors"))
        raise(ErrorKind::Parse, "checkpoint header is missing required blocks");

    LanguageModel model;
    try {
        model.config = config_from_json(header.at("config"));
    } catch (const json::exception& e) {
        raise(ErrorKind::Parse, std::string("invalid config block: ") +
                                    e.what());
    }
    model.config.validate();
    model.vocab.size = model.config.vocab_size;
    model.params.tensors = base_layout(model.config);

    std::vector<NamedTensor*> expected;
    for (auto& t : model.params.tensors) expected.push_back(&t);

    if (!header.at("adapters").is_null()) {
        AdapterSet set;
        try {
            const json& a = header.at("adapters");
            set.spec.rank = a.at("rank").get<int32_t>();
            set.spec.alpha = a.at("alpha").get<double>();
            set.spec.targets = a.at("targets").get<std::vector<std::string>>();
            set.spec.init_std = a.at("init_std").get<double>();
        } catch (const json::exception& e) {
            raise(ErrorKind::Parse, std::string("invalid adapter block: ") +
                                        e.what());
        }
        set.params.tensors = adapter_layout(model.config, set.spec);
        model.adapters = std::move(set);
        for (auto& t : model.adapters->params.tensors) expected.push_back(&t);
    }

    const json& manifest = header.at("tensors");
    if (!manifest.is_array() || manifest.size() != expected.size())
        raise(ErrorKind::ShapeMismatch,
              "tensor manifest does not match the declared layout");
    for (size_t i = 0; i < expected.size(); ++i) {
        std::string name;
        std::vector<int64_t> shape;
        try {
            const json& entry = manifest[i];
            name = entry.at("name").get<std::string>();
            shape = entry.at("shape").get<std::vector<int64_t>>();
        } catch (const json::exception& e) {
            raise(ErrorKind::Parse, std::string("invalid tensor manifest: ") +
                                        e.what());
        }
        if (name != expected[i]->name || shape != expected[i]->shape)
            raise(ErrorKind::ShapeMismatch,
                  "tensor '" + name + "' disagrees with the expected '" +
                      expected[i]->name + "'");
    }

    for (NamedTensor* t : expected) read_tensor_data(in, *t);

    char probe;
    if (in.read(&probe, 1); in.gcount() != 0)
        raise(ErrorKind::Parse, "trailing bytes after the last tensor");

    for (NamedTensor* t : expected)
        for (float v : t->data)
            if (!std::isfinite(v))
                raise(ErrorKind::NumericFailure,
                      "non-finite value in tensor '" + t->name + "'");
    return model;
}

void save_model(const LanguageModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot open '" + path + "' for writing");
    save_model(model, static_cast<std::ostream&>(out));
    out.close();
    if (!out) raise(ErrorKind::Io, "failed to finish writing '" + path + "'");
}

LanguageModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open '" + path + "' for reading");
    return load_model(static_cast<std::istream&>(in));
}

std::string save_model_bytes(const LanguageModel& model) {
    std::ostringstream out(std::ios::binary);
    save_model(model, static_cast<std::ostream&>(out));
    return out.str();
}

LanguageModel load_model_bytes(const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    return load_model(static_cast<std::istream&>(in));
}

} // namespace fsdlab
