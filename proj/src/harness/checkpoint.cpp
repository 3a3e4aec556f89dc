#include "fusu/harness/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fusu::harness {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr const char* kMagic = "FUSU-CKPT 1";

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& in, const std::filesystem::path& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw std::runtime_error("checkpoint " + path.string() + ": truncated");
    }
    return value;
}

std::uint8_t dtype_code(torch::ScalarType t) {
    switch (t) {
        case torch::kFloat32: return 0;
        case torch::kFloat64: return 1;
        case torch::kInt64: return 2;
        default: throw std::invalid_argument("checkpoint: unsupported tensor dtype");
    }
}

torch::ScalarType dtype_of(std::uint8_t code, const std::filesystem::path& path) {
    switch (code) {
        case 0: return torch::kFloat32;
        case 1: return torch::kFloat64;
        case 2: return torch::kInt64;
        default: throw std::runtime_error("checkpoint " + path.string() + ": unknown dtype code");
    }
}

}  // namespace

std::map<std::string, torch::Tensor> Checkpoint::with_prefix(const std::string& prefix) const {
    std::map<std::string, torch::Tensor> out;
    for (const auto& [name, t] : tensors) {
        if (name.rfind(prefix, 0) == 0) {
            out[name.substr(prefix.size())] = t;
        }
    }
    return out;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    KeyValueText header = ckpt.header;
    header.set("tensor_count", static_cast<long long>(ckpt.tensors.size()));
    const std::string text = header.str();

    // Write beside the target and rename so an interrupted run never leaves half a file.
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("checkpoint: cannot write " + tmp.string());
        }
        out << kMagic << '\n' << text.size() << '\n' << text;
        for (const auto& [name, tensor] : ckpt.tensors) {
            const auto t = tensor.detach().contiguous().cpu();
            put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            put<std::uint8_t>(out, dtype_code(t.scalar_type()));
            put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim()));
            for (const auto d : t.sizes()) {
                put<std::int64_t>(out, d);
            }
            out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
        }
        if (!out) {
            throw std::runtime_error("checkpoint: write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("checkpoint: cannot open " + path.string());
    }
    std::string magic;
    std::getline(in, magic);
    if (magic != kMagic) {
        throw std::runtime_error("checkpoint " + path.string() + ": not a checkpoint file");
    }
    std::string size_line;
    std::getline(in, size_line);
    std::size_t header_size = 0;
    try {
        header_size = std::stoull(size_line);
    } catch (const std::exception&) {
        throw std::runtime_error("checkpoint " + path.string() + ": bad header size");
    }
    std::string text(header_size, '\0');
    in.read(text.data(), static_cast<std::streamsize>(header_size));
    if (!in) {
        throw std::runtime_error("checkpoint " + path.string() + ": truncated header");
    }
    Checkpoint ckpt;
    ckpt.header = KeyValueText::parse(text, path.string());
    const auto count = ckpt.header.get_int("tensor_count");
    for (long long i = 0; i < count; ++i) {
        const auto name_len = take<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto dtype = dtype_of(take<std::uint8_t>(in, path), path);
        const auto rank = take<std::uint32_t>(in, path);
        std::vector<int64_t> dims(rank);
        for (auto& d : dims) {
            d = take<std::int64_t>(in, path);
        }
        auto t = torch::empty(dims, torch::TensorOptions().dtype(dtype));
        in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
        if (!in) {
            throw std::runtime_error("checkpoint " + path.string() + ": truncated tensor '" + name + "'");
        }
        ckpt.tensors.emplace(std::move(name), std::move(t));
    }
    return ckpt;
}

}  // namespace fusu::harness
