#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "granbath/dsmc.hpp"
#include "granbath/format.hpp"
#include "granbath/io.hpp"

using namespace granbath;

TEST_SUITE("io")
{
    TEST_CASE("sha256")
    {
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    TEST_CASE("format_real round-trips")
    {
        for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.30224849137808807}) {
            CHECK(std::stod(format_real(x)) == x);
        }
        CHECK(format_real(0.5) == "0.5");
    }

    TEST_CASE("atomic write leaves no temporary")
    {
        const auto dir = std::filesystem::temp_directory_path() / "granbath_io_test";
        std::filesystem::create_directories(dir);
        write_file_atomic(dir / "a.txt", "hello\n");
        CHECK(read_file(dir / "a.txt") == "hello\n");
        CHECK_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
        CHECK(sha256_file(dir / "a.txt") == sha256_hex("hello\n"));
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("snapshot round trips")
    {
        const auto e = init_ensemble(InitSpec::maxwellian(1.0), 3, 1.5, 4.5, 257, 3);
        SnapshotHeader h;
        h.dimension = 3;
        h.np = e.size();
        h.time = 1.25;
        h.rho = 1.5;
        h.alpha = 0.95;
        h.tau = 0.075;

        std::stringstream csv;
        write_snapshot_csv(csv, h, e);
        const auto a = read_snapshot_csv(csv);
        CHECK(a.ensemble.velocities == e.velocities);
        CHECK(a.header.time == 1.25);
        CHECK(a.header.alpha == 0.95);
        CHECK(a.header.np == 257);
        CHECK(a.ensemble.rho == 1.5);

        std::stringstream bin;
        write_snapshot_binary(bin, h, e);
        const auto b = read_snapshot_binary(bin);
        CHECK(b.ensemble.velocities == e.velocities);
        CHECK(b.header.tau == 0.075);
        CHECK(b.header.dimension == 3);

        std::stringstream garbage("not a snapshot");
        CHECK_THROWS(read_snapshot_binary(garbage));
        std::stringstream truncated(bin.str().substr(0, 100));
        CHECK_THROWS(read_snapshot_binary(truncated));
    }
}
