// Copyright 2026 The cdcim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace cdcim {

// ---------------------------------------------------------------------------
// Error types. Everything derives from cdcim::Error so callers (the CLI in
// particular) can map library failures onto input-error exit codes.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class RangeError : public Error {
public:
  using Error::Error;
};

class IndexError : public Error {
public:
  using Error::Error;
};

class CapacityError : public Error {
public:
  using Error::Error;
};

class LengthError : public Error {
public:
  using Error::Error;
};

class ConstructionError : public Error {
public:
  using Error::Error;
};

class SolverError : public Error {
public:
  using Error::Error;
};

class InputError : public Error {
public:
  using Error::Error;
};

class CalibrationError : public Error {
public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Scalar policy. Analog values are computed either in double precision or in
// exact rational arithmetic; the latter makes the mismatch-free signal path
// bit-exact against the integer reference.
// ---------------------------------------------------------------------------

using Rational = boost::multiprecision::cpp_rational;

template <class T>
concept AnalogScalar = std::is_same_v<T, double> || std::is_same_v<T, Rational>;

/// Exact conversion: every finite double is a dyadic rational.
template <AnalogScalar T>
T from_double(double x) {
  if constexpr (std::is_same_v<T, double>) {
    return x;
  } else {
    if (!std::isfinite(x)) throw InputError("non-finite value cannot be made rational");
    return Rational(x);
  }
}

template <AnalogScalar T>
T from_ratio(std::int64_t num, std::int64_t den) {
  if constexpr (std::is_same_v<T, double>) {
    return static_cast<double>(num) / static_cast<double>(den);
  } else {
    return Rational(num, den);
  }
}

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.template convert_to<double>(); }

inline double abs_value(double x) { return std::abs(x); }
inline Rational abs_value(const Rational& x) { return boost::multiprecision::abs(x); }

/// Round half away from zero on an exact integer quotient num/den (den > 0).
inline std::int64_t round_half_away(std::int64_t num, std::int64_t den) {
  const std::int64_t mag = (2 * (num < 0 ? -num : num) + den) / (2 * den);
  return num < 0 ? -mag : mag;
}

inline double round_half_away(double x) { return std::round(x); }

template <class T>
constexpr T clamp_value(T v, T lo, T hi) {
  return v < lo ? lo : (hi < v ? hi : v);
}

/// Derives an independent sub-seed with one splitmix64 step.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic generator for one (seed, stream) pair. Independent streams let
/// Monte Carlo samples be evaluated in any order with identical results.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace cdcim
