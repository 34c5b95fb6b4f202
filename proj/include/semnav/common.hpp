#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace semnav {

// World raster resolution, meters per cell (3 m window / 60 cells).
inline constexpr double kResolution = 0.05;

inline constexpr double kPi = 3.14159265358979323846;

// Semantic class of a grid cell / laser return.
// `unknown` only appears in sensor-side egocentric maps, never in a
// rasterized world grid.
enum class ClassId : std::uint8_t {
  free = 0,
  unknown = 1,
  wall = 2,
  chair = 3,
  table = 4,
};

inline constexpr int kClassCount = 5;

inline bool is_obstacle(ClassId c) {
  return c == ClassId::wall || c == ClassId::chair || c == ClassId::table;
}

inline const char* class_name(ClassId c) {
  switch (c) {
    case ClassId::free: return "free";
    case ClassId::unknown: return "unknown";
    case ClassId::wall: return "wall";
    case ClassId::chair: return "chair";
    case ClassId::table: return "table";
  }
  return "?";
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, 0 = +x, CCW positive
};

// ---------------------------------------------------------------------------
// Errors. Parse/format/domain failures are reported as exceptions; the CLI
// maps each category to a distinct exit code.

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed text input (world files, config documents).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// Binary container damage: bad magic, version mismatch, truncation, checksum.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Semantically invalid arguments (pose inside an obstacle, size mismatch...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic random streams. mt19937_64 is fully specified by the
// standard; the distribution transforms below are spelled out explicitly so
// results do not depend on the standard library implementation.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; two uniforms per draw, no cached spare.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Derives an independent stream seed from a base seed and a stream index.
// splitmix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Shortest round-trip decimal formatting; used everywhere a float lands in a
// text artifact so identical runs produce identical bytes.

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double wrap_angle(double a) {
  while (a >= kPi) a -= 2.0 * kPi;
  while (a < -kPi) a += 2.0 * kPi;
  return a;
}

static_assert(std::endian::native == std::endian::little,
              "binary file formats assume a little-endian host");

}  // namespace semnav
