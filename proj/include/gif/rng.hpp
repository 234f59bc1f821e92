#pragma once

#include <array>
#include <cstdint>

namespace gif {

/// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// Independent draw streams tag which quantity a stream feeds.
enum class Purpose : std::uint32_t {
  TargetComponent = 1,
  TargetOffset = 2,
  SourceNoise = 3,
  Projection = 4,
  Perturbation = 5,
  Query = 6,
  Auxiliary = 7,
};

/// Stream keyed by (seed, stream index, purpose). Draws depend only on the
/// key and on how many values were taken from this stream, so particle i
/// gets the same numbers whatever order or thread it is processed in.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream, Purpose purpose);

  std::uint32_t next_u32();
  double uniform();         // [0,1), 53-bit resolution
  double normal();          // polar Box-Muller
  double sign();            // -1 or +1 with equal probability
  int index(int n);         // uniform integer in [0, n)

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gif
