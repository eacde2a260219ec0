#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace instsupp {

/// 64-bit FNV-1a. Stable across platforms and runs.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  /// Field separator so ("ab","c") and ("a","bc") hash differently.
  Fnv1a& field(std::string_view bytes) {
    update(bytes);
    return update(std::string_view("\x1f", 1));
  }
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view bytes) { return Fnv1a().update(bytes).digest(); }

}  // namespace instsupp
