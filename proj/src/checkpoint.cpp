#include "fignn/checkpoint.hpp"

#include "fignn/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fignn::io {

namespace {

constexpr std::string_view kMagic = "FIGNNCKP";

template <typename T>
void put_le(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t at) {
    if (at + sizeof(T) > bytes.size()) throw InvariantError("checkpoint truncated");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<T>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
    return v;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xF];
    return s;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
    nlohmann::json tensors = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (ParamId p = 0; p < ckpt.parameters.size(); ++p) {
        const Tensor& t = ckpt.parameters.value(p);
        tensors.push_back({{"name", ckpt.parameters.name(p)},
                           {"shape", {t.rows(), t.cols()}},
                           {"offset", offset},
                           {"count", t.size()}});
        offset += 8 * t.size();
    }
    const nlohmann::json manifest = {{"format", "fignn-checkpoint"},
                                     {"version", kCheckpointVersion},
                                     {"model", ckpt.model.to_json()},
                                     {"fields", ckpt.field_names},
                                     {"vocabulary", {{"hash", ckpt.vocab_hash}, {"path", ckpt.vocab_path}}},
                                     {"training", ckpt.training},
                                     {"tensors", std::move(tensors)}};
    const std::string text = manifest.dump();
    std::string out(kMagic);
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint64_t>(out, text.size());
    out += text;
    out.reserve(out.size() + offset);
    for (ParamId p = 0; p < ckpt.parameters.size(); ++p)
        for (double v : ckpt.parameters.value(p).values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    if (bytes.substr(0, kMagic.size()) != kMagic) throw InvariantError("not a fignn checkpoint (bad magic)");
    const auto version = get_le<std::uint32_t>(bytes, kMagic.size());
    if (version != kCheckpointVersion)
        throw ConfigError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
    const auto len = get_le<std::uint64_t>(bytes, kMagic.size() + 4);
    const std::size_t body = kMagic.size() + 12;
    if (body + len > bytes.size()) throw InvariantError("checkpoint truncated");
    Checkpoint ckpt;
    try {
        const auto manifest = nlohmann::json::parse(bytes.substr(body, len));
        if (manifest.at("version").get<std::uint32_t>() != version)
            throw InvariantError("checkpoint manifest version disagrees with header");
        ckpt.model = ModelConfig::from_json(manifest.at("model"));
        ckpt.field_names = manifest.at("fields").get<std::vector<std::string>>();
        ckpt.vocab_hash = manifest.at("vocabulary").at("hash").get<std::string>();
        ckpt.vocab_path = manifest.at("vocabulary").at("path").get<std::string>();
        ckpt.training = manifest.at("training");
        const std::size_t blobs = body + len;
        for (const auto& tj : manifest.at("tensors")) {
            const auto shape = tj.at("shape").get<std::vector<std::size_t>>();
            const auto offset = tj.at("offset").get<std::uint64_t>();
            const auto count = tj.at("count").get<std::size_t>();
            if (shape.size() != 2 || shape[0] * shape[1] != count) throw InvariantError("checkpoint tensor shape mismatch");
            std::vector<double> data(count);
            for (std::size_t i = 0; i < count; ++i)
                data[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, blobs + offset + 8 * i));
            ckpt.parameters.add(tj.at("name").get<std::string>(), Tensor(shape[0], shape[1], std::move(data)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvariantError(std::string("malformed checkpoint manifest: ") + e.what());
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write checkpoint " + path.string());
    const auto bytes = encode_checkpoint(ckpt);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace fignn::io
