#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "beampred/autodiff.hpp"
#include "beampred/binary_io.hpp"
#include "beampred/config.hpp"
#include "beampred/tensor.hpp"

namespace beampred {

enum class InitScheme { uniform_scaled, zeros };

namespace detail {
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Default fan-in: leading dims for rank >= 2 (weights are stored (in, out)), the
/// single dim for vectors.
inline std::size_t default_fan_in(const Shape& shape) {
    if (shape.empty()) return 1;
    if (shape.size() == 1) return shape[0];
    return shape_size(shape) / shape.back();
}

/// Counter-based draw keyed by (seed, name): element i depends only on the key and i,
/// so creation order never changes a tensor.
template <typename T = float>
BasicTensor<T> seeded_init(const std::string& name, const Shape& shape, InitScheme scheme, std::uint64_t seed, std::size_t fan_in = 0) {
    BasicTensor<T> t(shape);
    if (scheme == InitScheme::zeros) return t;
    if (fan_in == 0) fan_in = default_fan_in(shape);
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
    const std::uint64_t key = detail::mix64(seed ^ detail::fnv1a64(name));
    for (std::size_t i = 0; i < t.size(); ++i) {
        const std::uint64_t bits = detail::mix64(key + 0x632be59bd9b4e019ULL * (i + 1));
        const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
        // round through float so float and double stores hold the same values
        t[i] = static_cast<T>(static_cast<float>((2.0 * u - 1.0) * bound));
    }
    return t;
}

/// Named tensors with trainable/frozen flags. Names iterate in sorted order.
template <typename T>
class BasicParamStore {
   public:
    using value_type = T;

    struct Entry {
        BasicTensor<T> value;
        bool trainable = true;
    };

    void add(const std::string& name, BasicTensor<T> value, bool trainable) {
        if (name.empty()) throw ConfigError("parameter name must not be empty");
        if (entries_.contains(name)) throw ConfigError("duplicate parameter `" + name + "`");
        entries_.emplace(name, Entry{std::move(value), trainable});
    }

    bool contains(const std::string& name) const { return entries_.contains(name); }
    const Entry& entry(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw IndexError("no parameter `" + name + "`");
        return it->second;
    }
    const BasicTensor<T>& value(const std::string& name) const { return entry(name).value; }
    bool trainable(const std::string& name) const { return entry(name).trainable; }

    /// Mutable access to a trainable tensor. Frozen tensors are immutable.
    BasicTensor<T>& trainable_value(const std::string& name) {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw IndexError("no parameter `" + name + "`");
        if (!it->second.trainable) throw ConfigError("parameter `" + name + "` is frozen");
        return it->second.value;
    }

    const std::map<std::string, Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    std::vector<std::string> trainable_names() const {
        std::vector<std::string> out;
        for (const auto& [n, e] : entries_)
            if (e.trainable) out.push_back(n);
        return out;
    }

    std::size_t trainable_count() const {
        std::size_t n = 0;
        for (const auto& [name, e] : entries_)
            if (e.trainable) n += e.value.size();
        return n;
    }

    /// Differentiable leaf for trainable entries, constant for frozen ones.
    Var<T> bind(Tape<T>& tape, const std::string& name) const {
        const Entry& e = entry(name);
        return e.trainable ? tape.leaf(e.value, name) : tape.constant(e.value);
    }

    /// Checksum over all frozen tensors.
    std::uint64_t frozen_checksum() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& [n, e] : entries_)
            if (!e.trainable) h = detail::mix64(h ^ detail::fnv1a64(n) ^ checksum(e.value));
        return h;
    }

    template <typename U>
    BasicParamStore<U> cast() const {
        BasicParamStore<U> out;
        for (const auto& [n, e] : entries_) out.add(n, e.value.template cast<U>(), e.trainable);
        return out;
    }

    /// Replaces every tensor from `other`; names, shapes and flags must match and
    /// frozen tensors must already be identical.
    template <typename U>
    void assign_from(const BasicParamStore<U>& other) {
        for (const auto& [n, e] : other.entries())
            if (!entries_.contains(n)) throw ConfigError("checkpoint tensor `" + n + "` has no counterpart in the model");
        for (auto& [n, mine] : entries_) {
            if (!other.contains(n)) throw ConfigError("checkpoint is missing tensor `" + n + "`");
            const auto& theirs = other.entry(n);
            if (theirs.value.shape() != mine.value.shape())
                throw ConfigError("tensor `" + n + "` shape " + shape_str(theirs.value.shape()) + " != model " + shape_str(mine.value.shape()));
            if (theirs.trainable != mine.trainable) throw ConfigError("tensor `" + n + "` trainable flag differs from model");
            BasicTensor<T> converted = theirs.value.template cast<T>();
            if (!mine.trainable) {
                if (!(converted == mine.value)) throw ConfigError("frozen tensor `" + n + "` differs from the model (seed mismatch?)");
                continue;
            }
            mine.value = std::move(converted);
        }
    }

   private:
    std::map<std::string, Entry> entries_;
};

using ParamStore = BasicParamStore<float>;

// ---------------------------------------------------------------------------
// BPCK checkpoint

template <typename T>
void save_checkpoint(std::ostream& os, const BasicParamStore<T>& store) {
    io::put_magic(os, "BPCK");
    io::put<std::uint16_t>(os, 1);
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, e] : store.entries()) {
        if (name.size() > 0xffff) throw ConfigError("parameter name too long: " + name);
        io::put<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        io::put<std::uint8_t>(os, e.trainable ? 1 : 0);
        io::put<std::uint8_t>(os, static_cast<std::uint8_t>(e.value.rank()));
        for (auto d : e.value.shape()) io::put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
        for (T v : e.value.data()) io::put<float>(os, static_cast<float>(v));
    }
}

template <typename T>
void save_checkpoint(const std::string& path, const BasicParamStore<T>& store) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path);
    save_checkpoint(out, store);
    if (!out) throw IoError("write failed for " + path);
}

inline ParamStore load_checkpoint(std::istream& is) {
    try {
        io::expect_magic(is, "BPCK");
        if (io::get<std::uint16_t>(is, "version") != 1) throw IoError("corrupt checkpoint: unsupported version");
        const auto count = io::get<std::uint32_t>(is, "tensor count");
        ParamStore store;
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto len = io::get<std::uint16_t>(is, "name length");
            std::string name(len, '\0');
            if (!is.read(name.data(), len)) throw IoError("truncated file while reading name");
            const bool trainable = io::get<std::uint8_t>(is, "flag") != 0;
            const auto rank = io::get<std::uint8_t>(is, "rank");
            Shape shape(rank);
            for (auto& d : shape) d = io::get<std::uint32_t>(is, "dim");
            Tensor t(shape);
            for (float& v : t.data()) v = io::get<float>(is, "payload");
            store.add(name, std::move(t), trainable);
        }
        return store;
    } catch (const IoError& e) {
        throw IoError(std::string("corrupt checkpoint: ") + e.what());
    }
}

inline ParamStore load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    return load_checkpoint(in);
}

}  // namespace beampred
