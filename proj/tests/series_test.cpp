#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <callpack/series.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace callpack;

namespace {

OccurrenceSummary occ(double peak) {
    OccurrenceSummary o;
    o.peak_participants = peak;
    o.audio_streams = peak;
    o.video_streams = peak / 2.0;
    o.ss_streams = 1.0;
    o.audio_mbps = 0.064;
    o.video_mbps = 1.0;
    o.ss_mbps = 1.5;
    return o;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("history is ordered oldest first") {
    SeriesStore s;
    s.record("a", occ(3));
    s.record("a", occ(5));
    s.record("a", occ(7));
    const auto h = s.history("a");
    REQUIRE(h.size() == 3);
    CHECK(h[0].peak_participants == 3.0);
    CHECK(h[2].peak_participants == 7.0);
    CHECK(s.history("unknown").empty());
    CHECK(s.size() == 1);
}

TEST_CASE("only the last ten occurrences are kept") {
    SeriesStore s;
    for (int i = 1; i <= 15; ++i) s.record("a", occ(double(i)));
    const auto h = s.history("a");
    REQUIRE(h.size() == SeriesStore::kRetention);
    CHECK(h.front().peak_participants == 6.0);
    CHECK(h.back().peak_participants == 15.0);
}

TEST_CASE("sum_stream_mbps combines the three stream kinds") {
    const OccurrenceSummary o = occ(10);
    CHECK(o.sum_stream_mbps() ==
          doctest::Approx(10 * 0.064 + 5 * 1.0 + 1 * 1.5));
}

TEST_CASE("save/load round trip is lossless and byte-stable") {
    SeriesStore s;
    for (int i = 0; i < 20; ++i) {
        const std::string id = "s" + std::to_string(i % 7);
        s.record(id, occ(2.0 + i * 0.25));
    }
    const std::string p1 = "series_rt1.json", p2 = "series_rt2.json";
    s.save(p1);
    const SeriesStore loaded = SeriesStore::load(p1);
    CHECK(loaded == s);
    loaded.save(p2);
    CHECK(slurp(p1) == slurp(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("load of a missing file throws") {
    CHECK_THROWS(SeriesStore::load("no_such_series.json"));
}
