#include "granbath/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <openssl/evp.h>

#include "granbath/format.hpp"

namespace granbath {

static_assert(std::endian::native == std::endian::little, "binary snapshots assume a little-endian host");

void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
    }
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sha256_hex(std::string_view bytes)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::ostringstream hex;
    hex << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::setw(2) << static_cast<int>(md[i]);
    }
    return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

SnapshotHeader snapshot_header(const SimState& state, const SimConfig& config)
{
    SnapshotHeader h;
    h.dimension = config.dimension;
    h.np = state.ensemble.size();
    h.time = state.time;
    h.rho = state.ensemble.rho;
    h.alpha = config.alpha;
    h.tau = config.tau();
    return h;
}

void write_snapshot_csv(std::ostream& out, const SnapshotHeader& header, const VelocityEnsemble& e)
{
    out << "# granbath snapshot v" << header.version << '\n';
    out << "# time=" << format_real(header.time) << " Np=" << header.np << " rho=" << format_real(header.rho)
        << " alpha=" << format_real(header.alpha) << " tau=" << format_real(header.tau) << " dim=" << header.dimension
        << '\n';
    for (int d = 0; d < header.dimension; ++d) {
        out << (d ? "," : "") << 'v' << d;
    }
    out << '\n';
    for (std::size_t i = 0; i < e.size(); ++i) {
        const auto v = e.particle(i);
        for (std::size_t d = 0; d < v.size(); ++d) {
            out << (d ? "," : "") << format_real(v[d]);
        }
        out << '\n';
    }
}

namespace {

constexpr char snapshot_magic[8] = {'G', 'B', 'S', 'N', 'A', 'P', '\0', '\1'};

template <class T>
void put(std::ostream& out, T value)
{
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in)
{
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw std::runtime_error("truncated binary snapshot");
    }
    return value;
}

void check_header(const SnapshotHeader& h)
{
    if (h.version != snapshot_version) {
        throw std::runtime_error("unsupported snapshot version " + std::to_string(h.version));
    }
    if (h.dimension < 2 || h.dimension > 64 || h.np < 2 || !(h.rho > 0.0)) {
        throw std::runtime_error("invalid snapshot header");
    }
}

double parse_field(const std::string& line, const std::string& key)
{
    const auto pos = line.find(key + "=");
    if (pos == std::string::npos) {
        throw std::runtime_error("snapshot header lacks " + key);
    }
    return std::stod(line.substr(pos + key.size() + 1));
}

}  // namespace

void write_snapshot_binary(std::ostream& out, const SnapshotHeader& header, const VelocityEnsemble& e)
{
    out.write(snapshot_magic, sizeof snapshot_magic);
    put<std::uint32_t>(out, header.version);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(header.dimension));
    put<std::uint64_t>(out, header.np);
    put(out, header.time);
    put(out, header.rho);
    put(out, header.alpha);
    put(out, header.tau);
    out.write(reinterpret_cast<const char*>(e.velocities.data()),
              static_cast<std::streamsize>(e.velocities.size() * sizeof(double)));
}

Snapshot read_snapshot_binary(std::istream& in)
{
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, snapshot_magic, sizeof magic) != 0) {
        throw std::runtime_error("not a binary snapshot");
    }
    Snapshot s;
    s.header.version = get<std::uint32_t>(in);
    s.header.dimension = static_cast<int>(get<std::uint32_t>(in));
    s.header.np = get<std::uint64_t>(in);
    s.header.time = get<double>(in);
    s.header.rho = get<double>(in);
    s.header.alpha = get<double>(in);
    s.header.tau = get<double>(in);
    check_header(s.header);
    s.ensemble.dimension = s.header.dimension;
    s.ensemble.rho = s.header.rho;
    s.ensemble.velocities.resize(s.header.np * static_cast<std::size_t>(s.header.dimension));
    in.read(reinterpret_cast<char*>(s.ensemble.velocities.data()),
            static_cast<std::streamsize>(s.ensemble.velocities.size() * sizeof(double)));
    if (!in) {
        throw std::runtime_error("truncated binary snapshot");
    }
    return s;
}

Snapshot read_snapshot_csv(std::istream& in)
{
    std::string first, second, columns;
    if (!std::getline(in, first) || !std::getline(in, second) || !std::getline(in, columns)) {
        throw std::runtime_error("truncated snapshot header");
    }
    const std::string prefix = "# granbath snapshot v";
    if (first.rfind(prefix, 0) != 0) {
        throw std::runtime_error("not a snapshot file");
    }
    Snapshot s;
    s.header.version = static_cast<std::uint32_t>(std::stoul(first.substr(prefix.size())));
    s.header.time = parse_field(second, "time");
    s.header.np = static_cast<std::uint64_t>(parse_field(second, "Np"));
    s.header.rho = parse_field(second, "rho");
    s.header.alpha = parse_field(second, "alpha");
    s.header.tau = parse_field(second, "tau");
    s.header.dimension = static_cast<int>(parse_field(second, "dim"));
    check_header(s.header);
    s.ensemble.dimension = s.header.dimension;
    s.ensemble.rho = s.header.rho;
    s.ensemble.velocities.reserve(s.header.np * static_cast<std::size_t>(s.header.dimension));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        int count = 0;
        while (std::getline(row, cell, ',')) {
            s.ensemble.velocities.push_back(std::stod(cell));
            ++count;
        }
        if (count != s.header.dimension) {
            throw std::runtime_error("snapshot row has " + std::to_string(count) + " columns");
        }
    }
    if (s.ensemble.size() != s.header.np) {
        throw std::runtime_error("snapshot particle count does not match header");
    }
    return s;
}

}  // namespace granbath
