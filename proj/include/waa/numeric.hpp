#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>

namespace waa {

using Rng = std::mt19937_64;

// Uniform double in [0, 1) built from the top 53 bits of one draw, so the
// stream is identical across standard library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// log(sum_i exp(args[i])), summed in index order. Empty input gives -inf.
inline double log_sum_exp(std::span<const double> args) {
  if (args.empty()) return -std::numeric_limits<double>::infinity();
  const double max_arg = *std::max_element(args.begin(), args.end());
  if (!std::isfinite(max_arg)) return max_arg;
  double sum = 0.0;
  for (double a : args) sum += std::exp(a - max_arg);
  return max_arg + std::log(sum);
}

// Writes softmax(args) into out and returns log_sum_exp(args), sharing the
// exponentials between the two.
inline double softmax(std::span<const double> args, std::span<double> out) {
  if (args.empty()) return -std::numeric_limits<double>::infinity();
  const double max_arg = *std::max_element(args.begin(), args.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < args.size(); ++i) sum += (out[i] = std::exp(args[i] - max_arg));
  for (std::size_t i = 0; i < args.size(); ++i) out[i] /= sum;
  return max_arg + std::log(sum);
}

// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace waa
