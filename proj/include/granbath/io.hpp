#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "granbath/dsmc.hpp"

namespace granbath {

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

inline constexpr std::uint32_t snapshot_version = 1;

struct SnapshotHeader
{
    std::uint32_t version = snapshot_version;
    int dimension = 3;
    std::uint64_t np = 0;
    double time = 0.0;
    double rho = 1.0;
    double alpha = 1.0;
    double tau = 0.0;
};

SnapshotHeader snapshot_header(const SimState& state, const SimConfig& config);

/**
 * Text snapshot:
 *
 *   # granbath snapshot v1
 *   # time=<t> Np=<n> rho=<r> alpha=<a> tau=<tau> dim=<N>
 *   v0,v1,...
 *   <one row of N reals per particle>
 */
void write_snapshot_csv(std::ostream& out, const SnapshotHeader& header, const VelocityEnsemble& e);

/**
 * Binary snapshot, little-endian: the 8 bytes "GBSNAP\0\1", u32 version,
 * u32 dimension, u64 Np, f64 time, rho, alpha, tau, then Np * N f64
 * velocities particle-major.
 */
void write_snapshot_binary(std::ostream& out, const SnapshotHeader& header, const VelocityEnsemble& e);

struct Snapshot
{
    SnapshotHeader header;
    VelocityEnsemble ensemble;
};

/// Both readers throw std::runtime_error on malformed input.
Snapshot read_snapshot_csv(std::istream& in);
Snapshot read_snapshot_binary(std::istream& in);

}  // namespace granbath
