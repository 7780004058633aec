#pragma once

#include "kvh/dynamics.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace kvh {

// Binary field snapshot: a fixed little-endian header followed by the raw payload in doubles
// (complex entries interleaved re, im).
//
//   0  "KVHB"            4  version u32       8  nq u32       12 np u32
//   16 n_levels u32      20 payload kind u32  24 q_min, q_max, p_min, p_max f64
//   56 hbar f64          64 t f64             72 d_floor f64  80 eps f64
//   88 flags u32 (bit 0: mixed closure state, bit 1: 2/3 truncation)     92 zero padding
enum class PayloadKind : std::uint32_t {
    Liouville = 1, // ρ, real
    Koopman = 2,   // Ψ, complex
    Wave = 3,      // Υ, n complex components
    Closure = 4,   // 𝒫, n×n complex per point
    MeanField = 5, // D real, then ρ̂ n×n complex
    Spin = 6,      // D, s̃_x, s̃_y, s̃_z real
};

inline constexpr std::uint32_t snapshot_version = 1;
inline constexpr std::size_t snapshot_header_size = 96;

struct Snapshot {
    State state;
    double t = 0;
};

std::vector<std::uint8_t> encode_snapshot(const State& s, double t);
Snapshot decode_snapshot(const std::vector<std::uint8_t>& bytes);

void write_snapshot(const std::filesystem::path& path, const State& s, double t);
Snapshot read_snapshot(const std::filesystem::path& path);

} // namespace kvh
