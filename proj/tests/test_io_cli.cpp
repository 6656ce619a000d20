#include <stdexcept>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "qsim/experiments.hpp"
#include "qsim/io.hpp"

using namespace qsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("qsim_io_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<TimeTagStream> sample_streams() {
    TimeTagStream a, b;
    a.channel = 0;
    a.timestamps = {100, 350, 900, 4000};
    a.duration_ps = 4000;
    b.channel = 1;
    b.timestamps = {120, 360, 2500};
    b.duration_ps = 4000;
    return {a, b};
}

const char* cli_path() { return std::getenv("QSIM_CLI"); }

int run_cli(const std::string& args, const fs::path& capture) {
    REQUIRE(cli_path() != nullptr);
    const std::string cmd =
        std::string(cli_path()) + " " + args + " > " + capture.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : (rc >> 8) & 0xff;
}

}  // namespace

TEST_CASE("binary time-tag round trip") {
    const auto dir = scratch_dir("bin_rt");
    const auto path = dir / "tags.ttag";
    const auto streams = sample_streams();
    write_timetag_binary(path, streams);
    const auto back = read_timetag_binary(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].channel == 0);
    CHECK(back[1].channel == 1);
    CHECK(back[0].timestamps == streams[0].timestamps);
    CHECK(back[1].timestamps == streams[1].timestamps);
    // duration is inferred from the last record
    CHECK(back[0].duration_ps == 4000);
    fs::remove_all(dir);
}

TEST_CASE("csv time-tag round trip") {
    const auto dir = scratch_dir("csv_rt");
    const auto path = dir / "tags.csv";
    const auto streams = sample_streams();
    write_timetag_csv(path, streams);
    const auto text = slurp(path);
    CHECK(text.rfind("channel,time_ps\n", 0) == 0);
    const auto back = read_timetag_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].timestamps == streams[0].timestamps);
    CHECK(back[1].timestamps == streams[1].timestamps);
    fs::remove_all(dir);
}

TEST_CASE("binary reader reports the byte offset of the first violation") {
    const auto dir = scratch_dir("bin_err");

    const auto bad_magic = dir / "magic.ttag";
    spit(bad_magic, std::string("XXAG\x01", 5));
    try {
        read_timetag_binary(bad_magic);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.byte_offset == 0);
    }

    // valid header + one full record + 3 stray bytes
    const auto truncated = dir / "trunc.ttag";
    std::string bytes = std::string("TTAG\x01", 5);
    bytes += std::string(1, '\0');                      // channel 0
    bytes += std::string("\x64\0\0\0\0\0\0\0", 8);      // t = 100
    bytes += "xyz";
    spit(truncated, bytes);
    try {
        read_timetag_binary(truncated);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.byte_offset == 14);  // start of the partial record
    }

    // times out of order on one channel
    const auto unsorted = dir / "unsorted.ttag";
    std::string rec = std::string("TTAG\x01", 5);
    rec += std::string(1, '\0') + std::string("\xc8\0\0\0\0\0\0\0", 8);  // t = 200
    rec += std::string(1, '\0') + std::string("\x64\0\0\0\0\0\0\0", 8);  // t = 100
    spit(unsorted, rec);
    try {
        read_timetag_binary(unsorted);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.byte_offset == 14);  // the offending record
    }
    fs::remove_all(dir);
}

TEST_CASE("csv reader rejects malformed rows") {
    const auto dir = scratch_dir("csv_err");
    const auto path = dir / "bad.csv";
    spit(path, "channel,time_ps\n0,100\n0,not_a_number\n");
    CHECK_THROWS_AS(read_timetag_csv(path), FormatError);
    fs::remove_all(dir);
}

TEST_CASE("histogram csv layout") {
    const auto dir = scratch_dir("hist_csv");
    CorrelationHistogram h;
    h.bin_width_ps = 10;
    h.window_ps = 10;
    h.counts = {1, 2, 3};
    h.tags_a = h.tags_b = 10;
    h.duration_ps = 1000;
    write_histogram_csv(dir / "h.csv", h, {0.5, 1.0, 1.5});
    const auto text = slurp(dir / "h.csv");
    CHECK(text.rfind("tau_ps,counts,g2\n", 0) == 0);
    CHECK(text.find("-10,1,0.5") != std::string::npos);
    CHECK(text.find("0,2,1") != std::string::npos);
    CHECK(text.find("10,3,1.5") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("atomic text write leaves no temp file behind") {
    const auto dir = scratch_dir("atomic");
    write_text_atomic(dir / "out.txt", "payload\n");
    CHECK(slurp(dir / "out.txt") == "payload\n");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
    CHECK(entries == 1);
    fs::remove_all(dir);
}

TEST_CASE("config json round trip") {
    const std::string text = R"({
        "schema_version": 1, "experiment": "hbt", "seed": 7,
        "emitter": {"rabi_hz": 2.1e8, "lifetime_ps": 745.0, "dephasing_hz": 2.1e8},
        "hbt": {"duration_ps": 1e8, "bin_width_ps": 64, "window_ps": 20000}
    })";
    const auto c = RunConfig::from_json_text(text);
    CHECK(c.experiment == "hbt");
    CHECK(c.seed == 7);
    CHECK(c.duration_ps == 100'000'000);
    const auto c2 = RunConfig::from_json_text(c.to_json_text());
    CHECK(c2.emitter.rabi_frequency == doctest::Approx(c.emitter.rabi_frequency).epsilon(1e-12));
    CHECK(c2.duration_ps == c.duration_ps);
    CHECK(c2.seed == c.seed);
}

TEST_CASE("config validation failures name the field") {
    CHECK_THROWS_AS(RunConfig::from_json_text("{not json"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"schema_version": 2, "experiment": "hbt"})"),
                    ConfigError);
    try {
        RunConfig::from_json_text(R"({"schema_version": 1, "experiment": "hbt", "seed": 1})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field == "emitter");
    }
    try {
        RunConfig::from_json_text(R"({"schema_version": 1, "experiment": "warp", "seed": 1})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field == "experiment");
    }
}

TEST_CASE("cli: hbt run is deterministic and config round-trips") {
    const auto dir = scratch_dir("cli_hbt");
    const auto write_config = [&](const fs::path& out_dir) {
        std::ostringstream cfg;
        cfg << R"({"schema_version": 1, "experiment": "hbt", "seed": 99,)"
            << R"("output_dir": ")" << out_dir.string() << R"(",)"
            << R"("emitter": {"rabi_hz": 2.136e8, "lifetime_ps": 745.0, "dephasing_hz": 2.136e8},)"
            << R"("hbt": {"duration_ps": 1e8, "bin_width_ps": 64, "window_ps": 20000}})";
        const auto path = out_dir.parent_path() / (out_dir.filename().string() + ".json");
        spit(path, cfg.str());
        return path;
    };

    const auto cfg1 = write_config(dir / "run1");
    const auto cfg2 = write_config(dir / "run2");
    CHECK(run_cli("run " + cfg1.string(), dir / "out1.txt") == 0);
    CHECK(run_cli("run " + cfg2.string(), dir / "out2.txt") == 0);

    const auto out1 = slurp(dir / "out1.txt");
    CHECK(out1.find("g2_zero=") != std::string::npos);
    CHECK(out1.find("lifetime_ps=") != std::string::npos);

    // identical (config, seed) -> byte-identical artifacts
    for (const char* name : {"timetags.ttag", "hbt_histogram.csv", "g2_fit.json"}) {
        CHECK(slurp(dir / "run1" / name) == slurp(dir / "run2" / name));
    }

    // the effective config re-runs to identical outputs
    auto effective = slurp(dir / "run1" / "effective_config.json");
    const std::string from = (dir / "run1").string();
    const std::string to = (dir / "run3").string();
    effective.replace(effective.find(from), from.size(), to);
    const auto cfg3 = dir / "run3.json";
    spit(cfg3, effective);
    CHECK(run_cli("run " + cfg3.string(), dir / "out3.txt") == 0);
    CHECK(slurp(dir / "run3" / "hbt_histogram.csv") == slurp(dir / "run1" / "hbt_histogram.csv"));
    fs::remove_all(dir);
}

TEST_CASE("cli: correlate-file reproduces a hand-counted pair") {
    const auto dir = scratch_dir("cli_corr");
    TimeTagStream a, b;
    a.channel = 0;
    a.timestamps = {1000};
    a.duration_ps = 10'000;
    b.channel = 0;
    b.timestamps = {1100};
    b.duration_ps = 10'000;
    write_timetag_binary(dir / "a.ttag", {a});
    write_timetag_binary(dir / "b.ttag", {b});
    CHECK(run_cli("correlate-file " + (dir / "a.ttag").string() + " " + (dir / "b.ttag").string() +
                      " --bin-ps 50 --window-ps 500 -o " + (dir / "h.csv").string(),
                  dir / "out.txt") == 0);
    const auto text = slurp(dir / "h.csv");
    CHECK(text.find("100,1,") != std::string::npos);  // one count at +100 ps
    fs::remove_all(dir);
}

TEST_CASE("cli: bessel and spectrum subcommands") {
    const auto dir = scratch_dir("cli_misc");
    CHECK(run_cli("bessel --beta 1.0471975512", dir / "bessel.txt") == 0);
    const auto bessel = slurp(dir / "bessel.txt");
    CHECK(bessel.rfind("n,j_n,j_n_squared", 0) == 0);
    CHECK(bessel.find("0,0.744") != std::string::npos);  // J_0(pi/3) = 0.74407

    CHECK(run_cli("spectrum --beta 1.5707963268 --drive-ghz 5 -o " + (dir / "s.csv").string(),
                  dir / "spec_out.txt") == 0);
    const auto spec = slurp(dir / "s.csv");
    CHECK(spec.rfind("offset_hz,intensity", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("cli: validation failures exit with code 1") {
    const auto dir = scratch_dir("cli_bad");
    spit(dir / "bad.json", R"({"schema_version": 1, "experiment": "warp"})");
    CHECK(run_cli("run " + (dir / "bad.json").string(), dir / "out.txt") == 1);
    CHECK(slurp(dir / "out.txt").find("error") != std::string::npos);
    CHECK(run_cli("bessel --beta -2", dir / "out2.txt") == 1);
    fs::remove_all(dir);
}
