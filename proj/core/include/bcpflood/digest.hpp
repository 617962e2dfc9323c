#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

namespace bcpflood {

// Incremental SHA-256, hex output. Used for provenance digests.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(std::span<const std::byte> bytes);
    Sha256& update(std::string_view text);

    template <class T>
        requires std::is_trivially_copyable_v<T>
    Sha256& update_values(std::span<const T> values) {
        return update(std::as_bytes(values));
    }

    template <class T>
        requires std::is_trivially_copyable_v<T>
    Sha256& update_value(const T& value) {
        return update(std::as_bytes(std::span<const T>(&value, 1)));
    }

    std::string hex();

private:
    struct State;
    std::unique_ptr<State> state_;
};

std::string sha256_hex(std::string_view text);

}  // namespace bcpflood
