#include "simulmt/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace simulmt {

namespace {

constexpr char kMagic[8] = {'S', 'I', 'M', 'U', 'L', 'M', 'T', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) throw std::runtime_error("truncated checkpoint file " + path);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out.write(kMagic, 8);
    for (const auto& [name, array] : ckpt.arrays) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, static_cast<std::uint32_t>(array.rank()));
        for (int d : array.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(array.data()), static_cast<std::streamsize>(array.size() * 8));
    }
    put_u32(out, 0);  // array-section terminator
    out.write(ckpt.config_echo.data(), static_cast<std::streamsize>(ckpt.config_echo.size()));
    if (!out) throw std::runtime_error("short write to checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path);
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("bad checkpoint magic in " + path);

    Checkpoint ckpt;
    for (;;) {
        const std::uint32_t name_len = get_u32(in, path);
        if (name_len == 0) break;
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw std::runtime_error("truncated checkpoint file " + path);
        const std::uint32_t rank = get_u32(in, path);
        std::vector<int> shape;
        std::size_t volume = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            const std::uint32_t d = get_u32(in, path);
            shape.push_back(static_cast<int>(d));
            volume *= d;
        }
        std::vector<double> values(volume);
        if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(volume * 8)))
            throw std::runtime_error("truncated checkpoint file " + path);
        ckpt.arrays.emplace(std::move(name), Array(std::move(shape), std::move(values)));
    }
    std::string echo((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ckpt.config_echo = std::move(echo);
    return ckpt;
}

Checkpoint checkpoint_from_store(const ParamStore& store, const std::string& config_echo) {
    Checkpoint ckpt;
    ckpt.config_echo = config_echo;
    for (const auto& [name, p] : store.all()) ckpt.arrays.emplace(name, p.value);
    return ckpt;
}

void load_into_store(const Checkpoint& ckpt, ParamStore& store) {
    for (auto& [name, p] : store.all()) {
        auto it = ckpt.arrays.find(name);
        if (it == ckpt.arrays.end()) throw std::runtime_error("checkpoint is missing array " + name);
        if (it->second.shape() != p.value.shape())
            throw std::runtime_error("checkpoint shape mismatch for array " + name + ": expected " +
                                     shape_string(p.value.shape()) + ", got " + shape_string(it->second.shape()));
        p.value = it->second;
    }
}

}  // namespace simulmt
