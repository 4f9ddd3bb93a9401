// SPDX-License-Identifier: Apache-2.0
#include "gpgait/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gpgait {

namespace {

constexpr const char* kMagic = "GPGW1";

void put_f32(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

double get_f32(const unsigned char* p) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return static_cast<double>(std::bit_cast<float>(bits));
}

class Reader {
public:
    Reader(const std::string& bytes, std::string where) : bytes_(bytes), where_(std::move(where)) {}

    std::string line() {
        const auto end = bytes_.find('\n', pos_);
        if (end == std::string::npos) fail("unexpected end of header");
        std::string out = bytes_.substr(pos_, end - pos_);
        pos_ = end + 1;
        return out;
    }

    std::string take(std::size_t n) {
        if (bytes_.size() - pos_ < n) fail("truncated payload");
        std::string out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    const unsigned char* raw(std::size_t n) {
        if (bytes_.size() - pos_ < n) fail("truncated payload");
        const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
        pos_ += n;
        return p;
    }

    bool done() const { return pos_ == bytes_.size(); }

    [[noreturn]] void fail(const std::string& msg) const { throw DataError(where_ + ": " + msg); }

private:
    const std::string& bytes_;
    std::string where_;
    std::size_t pos_ = 0;
};

template <typename T>
T field(Reader& r, const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::string k;
    T value{};
    if (!(in >> k >> value) || k != key) r.fail("expected '" + key + "' line, got '" + text + "'");
    return value;
}

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
    std::string out = std::string(kMagic) + "\n";
    out += "iteration " + std::to_string(ckpt.iteration) + "\n";
    out += "config " + std::to_string(ckpt.config_text.size()) + "\n" + ckpt.config_text + "\n";
    out += "tensors " + std::to_string(ckpt.tensors.size()) + "\n";
    for (const auto& t : ckpt.tensors) {
        if (t.name.empty() || t.name.find_first_of(" \t\n") != std::string::npos) {
            throw ShapeError("invalid tensor name '" + t.name + "'");
        }
        out += t.name + " " + std::to_string(t.value.rows()) + " " + std::to_string(t.value.cols()) + "\n";
    }
    out += "data\n";
    for (const auto& t : ckpt.tensors) {
        for (Eigen::Index i = 0; i < t.value.size(); ++i) put_f32(out, t.value.data()[i]);
    }
    return out;
}

Checkpoint decode_checkpoint(const std::string& bytes, const std::string& where) {
    Reader r(bytes, where);
    Checkpoint ckpt;
    if (r.line() != kMagic) r.fail("not a GPGW1 checkpoint");
    ckpt.iteration = field<std::int64_t>(r, r.line(), "iteration");
    const auto config_bytes = field<std::size_t>(r, r.line(), "config");
    ckpt.config_text = r.take(config_bytes);
    if (r.take(1) != "\n") r.fail("config section not terminated");
    const auto count = field<std::size_t>(r, r.line(), "tensors");
    for (std::size_t i = 0; i < count; ++i) {
        std::istringstream in(r.line());
        NamedTensor t;
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        if (!(in >> t.name >> rows >> cols) || rows < 0 || cols < 0) r.fail("malformed tensor directory entry");
        t.value.resize(rows, cols);
        ckpt.tensors.push_back(std::move(t));
    }
    if (r.line() != "data") r.fail("missing data marker");
    for (auto& t : ckpt.tensors) {
        const auto n = static_cast<std::size_t>(t.value.size());
        const unsigned char* p = r.raw(4 * n);
        for (std::size_t i = 0; i < n; ++i) t.value.data()[i] = get_f32(p + 4 * i);
    }
    if (!r.done()) r.fail("trailing bytes after payload");
    return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const std::string bytes = encode_checkpoint(ckpt);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return decode_checkpoint(buf.str(), path.string());
}

void append_tensors(Checkpoint& ckpt, const ParameterStore& store, const std::string& prefix) {
    for (const auto& p : store.all()) ckpt.tensors.push_back({prefix + p.name, p.value});
}

void load_tensors(const Checkpoint& ckpt, ParameterStore& store, const std::string& prefix) {
    for (auto& p : store.all()) {
        const NamedTensor* t = ckpt.find(prefix + p.name);
        if (!t) throw ShapeError("checkpoint has no tensor named " + prefix + p.name);
        if (t->value.rows() != p.value.rows() || t->value.cols() != p.value.cols()) {
            throw ShapeError("tensor " + prefix + p.name + " is " + std::to_string(t->value.rows()) + "x" +
                             std::to_string(t->value.cols()) + " in the checkpoint but the model expects " +
                             std::to_string(p.value.rows()) + "x" + std::to_string(p.value.cols()));
        }
        p.value = t->value;
    }
}

}  // namespace gpgait
