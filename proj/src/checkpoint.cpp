#include "hiertrack/mpn.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace hiertrack {

namespace {

constexpr std::array<char, 8> kMagic{'H', 'T', 'R', 'K', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(std::span<const unsigned char> bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

class Writer {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }
    template <typename T>
    void le(T value) {
        using U = std::make_unsigned_t<T>;
        auto u = static_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<unsigned char>((u >> (8 * i)) & 0xFF));
    }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        le(static_cast<std::uint64_t>(s.size()));
        bytes(s.data(), s.size());
    }
    std::vector<unsigned char>& buffer() { return buf_; }

private:
    std::vector<unsigned char> buf_;
};

class Reader {
public:
    Reader(std::span<const unsigned char> data, std::string source) : data_(data), source_(std::move(source)) {}
    void bytes(void* out, std::size_t n) {
        need(n);
        std::memcpy(out, data_.data() + pos_, n);
        pos_ += n;
    }
    template <typename T>
    T le() {
        need(sizeof(T));
        std::make_unsigned_t<T> u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(data_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(u);
    }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
    std::string str() {
        const auto n = le<std::uint64_t>();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t position() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw Error(ErrorKind::InvalidInput, source_ + ": truncated checkpoint");
    }
    std::span<const unsigned char> data_;
    std::string source_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    Writer w;
    w.bytes(kMagic.data(), kMagic.size());
    w.le(kVersion);
    w.str(checkpoint.params.config.to_text());
    w.le(checkpoint.iteration);
    auto tensors = const_cast<ModelParams&>(checkpoint.params).tensors();
    w.le(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        w.le(static_cast<std::uint32_t>(t.name.size()));
        w.bytes(t.name.data(), t.name.size());
        w.le(static_cast<std::uint32_t>(t.rows));
        w.le(static_cast<std::uint32_t>(t.cols));
        for (double v : t.values) w.f64(v);
    }
    const std::size_t count = checkpoint.params.parameter_count();
    if (checkpoint.optimizer) {
        const auto& opt = *checkpoint.optimizer;
        if (opt.first_moment.size() != count || opt.second_moment.size() != count) {
            throw Error(ErrorKind::Contract, "optimizer state does not match the parameter count");
        }
        w.le(std::uint8_t{1});
        w.le(opt.step);
        for (double v : opt.first_moment) w.f64(v);
        for (double v : opt.second_moment) w.f64(v);
    } else {
        w.le(std::uint8_t{0});
    }
    w.le(fnv1a(w.buffer()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(w.buffer().data()), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw Error(ErrorKind::Io, "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<ModelConfig>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open checkpoint " + path.string());
    const std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string src = path.string();
    if (data.size() < kMagic.size() + 8 || std::memcmp(data.data(), kMagic.data(), kMagic.size()) != 0) {
        throw Error(ErrorKind::InvalidInput, src + ": not a checkpoint file");
    }
    Reader trailer(std::span<const unsigned char>(data).subspan(data.size() - 8), src);
    if (trailer.le<std::uint64_t>() != fnv1a(std::span<const unsigned char>(data).first(data.size() - 8))) {
        throw Error(ErrorKind::InvalidInput, src + ": checksum mismatch");
    }

    Reader r(std::span<const unsigned char>(data).first(data.size() - 8), src);
    std::array<char, 8> magic{};
    r.bytes(magic.data(), magic.size());
    if (const auto version = r.le<std::uint32_t>(); version != kVersion) {
        throw Error(ErrorKind::InvalidInput, src + ": unsupported checkpoint version " + std::to_string(version));
    }
    const ModelConfig config = ModelConfig::from_text(r.str());
    if (expected && !(*expected == config)) {
        throw Error(ErrorKind::InvalidConfig, src + ": checkpoint model shape differs from the configured model");
    }
    Checkpoint ck{ModelParams::zeros(config), 0, std::nullopt};
    ck.iteration = r.le<std::uint64_t>();
    auto tensors = ck.params.tensors();
    if (r.le<std::uint32_t>() != tensors.size()) throw Error(ErrorKind::InvalidInput, src + ": tensor count mismatch");
    for (auto& t : tensors) {
        std::string name(r.le<std::uint32_t>(), '\0');
        r.bytes(name.data(), name.size());
        const auto rows = r.le<std::uint32_t>();
        const auto cols = r.le<std::uint32_t>();
        if (name != t.name || rows != static_cast<std::uint32_t>(t.rows) || cols != static_cast<std::uint32_t>(t.cols)) {
            throw Error(ErrorKind::InvalidInput, src + ": tensor " + name + " does not match the declared shape");
        }
        for (double& v : t.values) v = r.f64();
    }
    if (r.le<std::uint8_t>() == 1) {
        OptimizerState opt;
        opt.step = r.le<std::uint64_t>();
        const std::size_t n = ck.params.parameter_count();
        opt.first_moment.resize(n);
        opt.second_moment.resize(n);
        for (double& v : opt.first_moment) v = r.f64();
        for (double& v : opt.second_moment) v = r.f64();
        ck.optimizer = std::move(opt);
    }
    return ck;
}

}  // namespace hiertrack
