#include "kidc/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "kidc/errors.hpp"

namespace kidc::models {

namespace {

constexpr char kMagic[4] = {'K', 'I', 'D', 'C'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) {
        crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    }
    return crc ^ 0xFFFFFFFFu;
}

void save_params(const ModelParams& params, const std::string& path) {
    std::vector<unsigned char> payload;
    std::size_t bytes = 0;
    for (const auto& [name, t] : params.entries()) bytes += 16 + name.size() + 4 * t.size();
    payload.reserve(bytes);
    for (const auto& [name, t] : params.entries()) {
        put_u32(payload, static_cast<std::uint32_t>(name.size()));
        payload.insert(payload.end(), name.begin(), name.end());
        put_u32(payload, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.dims()) put_u32(payload, static_cast<std::uint32_t>(d));
        for (double v : t.values()) {
            put_u32(payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write checkpoint: " + path);
    out.write(kMagic, 4);
    std::vector<unsigned char> version;
    put_u32(version, kCheckpointVersion);
    out.write(reinterpret_cast<const char*>(version.data()), 4);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    std::vector<unsigned char> trailer;
    put_u32(trailer, crc32(payload.data(), payload.size()));
    out.write(reinterpret_cast<const char*>(trailer.data()), 4);
    if (!out) throw RunFailure("failed writing checkpoint: " + path);
}

ModelParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open checkpoint: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12) throw InvalidInput(path + ": truncated checkpoint");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw InvalidInput(path + ": bad magic, not a checkpoint file");
    }
    std::uint32_t version = get_u32(bytes.data() + 4);
    if (version != kCheckpointVersion) {
        throw InvalidInput(path + ": unsupported checkpoint version " + std::to_string(version));
    }
    const std::size_t payload_end = bytes.size() - 4;
    std::uint32_t want_crc = get_u32(bytes.data() + payload_end);
    std::uint32_t got_crc = crc32(bytes.data() + 8, payload_end - 8);
    if (want_crc != got_crc) throw InvalidInput(path + ": CRC mismatch, checkpoint is corrupt");

    std::vector<std::pair<std::string, num::Tensor>> entries;
    std::size_t pos = 8;
    while (pos < payload_end) {
        auto need = [&](std::size_t n) {
            if (pos + n > payload_end) throw InvalidInput(path + ": truncated checkpoint record");
        };
        need(4);
        std::uint32_t name_len = get_u32(bytes.data() + pos);
        pos += 4;
        need(name_len);
        std::string name(reinterpret_cast<const char*>(bytes.data() + pos), name_len);
        pos += name_len;
        need(4);
        std::uint32_t rank = get_u32(bytes.data() + pos);
        pos += 4;
        need(4 * static_cast<std::size_t>(rank));
        std::vector<std::size_t> dims(rank);
        std::size_t count = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            dims[d] = get_u32(bytes.data() + pos);
            pos += 4;
            count *= dims[d];
        }
        need(4 * count);
        std::vector<double> values(count);
        for (std::size_t i = 0; i < count; ++i) {
            values[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes.data() + pos)));
            pos += 4;
        }
        entries.emplace_back(std::move(name), num::Tensor(std::move(dims), std::move(values)));
    }
    return ModelParams::from_tensors(std::move(entries));
}

ModelParams load_params_for(const std::string& path, const ModelConfig& cfg) {
    ModelParams p = load_params(path);
    p.validate_against(cfg);
    return p;
}

}  // namespace kidc::models
