#pragma once

// Dense row-major tensors and the TSR1 binary file format.
//
// TSR1 layout: "TSR1", u8 precision (4 or 8 bytes per scalar), u8 ndim,
// ndim x u32 LE dims, then the row-major payload in little-endian order.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "mgnets/error.hpp"

namespace mgnets {

template <class T>
class Tensor {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>, "Tensor<T>: T must be float or double");

public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(std::vector<int> shape, T fill = T(0)) : shape_(std::move(shape)) {
        data_.assign(checked_numel(shape_), fill);
    }

    Tensor(std::vector<int> shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_numel(shape_) != data_.size())
            throw InvalidArgument("Tensor: buffer of " + std::to_string(data_.size()) + " does not match shape " +
                                  shape_string(shape_));
    }

    static Tensor scalar(T v) { return Tensor({1}, std::vector<T>{v}); }

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    /// Element (n, c, h, w) of a 4D tensor.
    T& at(int n, int c, int h, int w) { return data_[offset4(n, c, h, w)]; }
    const T& at(int n, int c, int h, int w) const { return data_[offset4(n, c, h, w)]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <class U>
    Tensor<U> cast() const {
        return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

    static std::string shape_string(const std::vector<int>& s) {
        std::string out = "(";
        for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
        return out + ")";
    }

private:
    static std::size_t checked_numel(const std::vector<int>& s) {
        if (s.empty()) throw InvalidArgument("Tensor: shape must have at least one dimension");
        std::size_t n = 1;
        for (int d : s) {
            if (d < 1) throw InvalidArgument("Tensor: dims must be >= 1, got " + shape_string(s));
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t offset4(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
    }

    std::vector<int> shape_;
    std::vector<T> data_;
};

namespace detail {

template <class U>
void put_le(std::string& out, U v) {
    static_assert(std::endian::native == std::endian::little, "TSR1 writer assumes a little-endian host");
    char buf[sizeof(U)];
    std::memcpy(buf, &v, sizeof(U));
    out.append(buf, sizeof(U));
}

template <class U>
U get_le(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(U) > in.size()) throw DataError("TSR1: truncated file");
    U v;
    std::memcpy(&v, in.data() + pos, sizeof(U));
    pos += sizeof(U);
    return v;
}

}  // namespace detail

template <class T>
std::string encode_tsr(const Tensor<T>& t) {
    std::string out = "TSR1";
    out.push_back(static_cast<char>(sizeof(T)));
    out.push_back(static_cast<char>(t.ndim()));
    for (int d : t.shape()) detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.reserve(out.size() + t.size() * sizeof(T));
    out.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(T));
    return out;
}

/// Decodes either precision into Tensor<T> (float payloads widen exactly).
template <class T>
Tensor<T> decode_tsr(const std::string& bytes) {
    if (bytes.size() < 6 || bytes.compare(0, 4, "TSR1") != 0) throw DataError("TSR1: bad magic");
    const int prec = static_cast<unsigned char>(bytes[4]);
    const int ndim = static_cast<unsigned char>(bytes[5]);
    if (prec != 4 && prec != 8) throw DataError("TSR1: precision flag must be 4 or 8, got " + std::to_string(prec));
    if (ndim < 1) throw DataError("TSR1: ndim must be >= 1");
    std::size_t pos = 6;
    std::vector<int> shape;
    std::size_t numel = 1;
    for (int i = 0; i < ndim; ++i) {
        const auto d = detail::get_le<std::uint32_t>(bytes, pos);
        if (d == 0 || d > (1u << 30)) throw DataError("TSR1: invalid dimension");
        shape.push_back(static_cast<int>(d));
        numel *= d;
    }
    if (bytes.size() - pos != numel * static_cast<std::size_t>(prec))
        throw DataError("TSR1: payload size does not match shape " + Tensor<T>::shape_string(shape));
    std::vector<T> data(numel);
    if (prec == 4) {
        std::vector<float> raw(numel);
        std::memcpy(raw.data(), bytes.data() + pos, numel * 4);
        std::copy(raw.begin(), raw.end(), data.begin());
    } else {
        std::vector<double> raw(numel);
        std::memcpy(raw.data(), bytes.data() + pos, numel * 8);
        std::copy(raw.begin(), raw.end(), data.begin());
    }
    return Tensor<T>(std::move(shape), std::move(data));
}

inline std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <class T>
void write_tsr(const std::filesystem::path& path, const Tensor<T>& t) {
    write_bytes(path, encode_tsr(t));
}

template <class T>
Tensor<T> read_tsr(const std::filesystem::path& path) {
    return decode_tsr<T>(read_bytes(path));
}

}  // namespace mgnets
