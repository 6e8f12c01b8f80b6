#include "absa/rng.hpp"

namespace absa {

std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : stage) {
    h ^= c;
    h *= 0x00000100000001B3ull;
  }
  return root ^ h;
}

}  // namespace absa
