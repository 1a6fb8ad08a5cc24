#include "pwm/rng.hpp"

namespace pwm {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

nn::Tensor Rng::normal(const nn::Shape& shape) {
  nn::Tensor t(shape);
  for (auto& v : t.storage()) v = normal();
  return t;
}

}  // namespace pwm
