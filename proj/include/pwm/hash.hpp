#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace pwm {

// 64-bit FNV-1a, incremental.
class Fnv1a {
 public:
  Fnv1a& update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) h_ = (h_ ^ p[i]) * 0x100000001b3ULL;
    return *this;
  }
  Fnv1a& update(std::string_view s) { return update(s.data(), s.size()); }
  std::uint64_t value() const { return h_; }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string hash_hex(std::string_view s) { return Fnv1a().update(s).hex(); }

}  // namespace pwm
