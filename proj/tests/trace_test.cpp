#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <callpack/trace.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace callpack;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

CallRecord two_person_call() {
    CallRecord c;
    c.call_id = "c00000001";
    c.series_id = "s0000001";
    c.start_s = 100;
    c.end_s = 700;
    c.participants = {"p0", "p1"};
    c.events = {
        {100, 0, EventAction::Join, MediaKind::Audio, 0.0f},
        {100, 0, EventAction::MediaStart, MediaKind::Audio, 0.064f},
        {130, 1, EventAction::Join, MediaKind::Audio, 0.0f},
        {130, 1, EventAction::MediaStart, MediaKind::Video, 1.0f},
        {200, 1, EventAction::MediaQualityChange, MediaKind::Video, 0.5f},
        {400, 1, EventAction::MediaStop, MediaKind::Video, 0.0f},
        {700, 0, EventAction::Leave, MediaKind::Audio, 0.0f},
        {700, 1, EventAction::Leave, MediaKind::Audio, 0.0f},
    };
    return c;
}

}  // namespace

TEST_CASE("max participants and joiner duration") {
    const CallRecord c = two_person_call();
    CHECK(max_participants(c) == 2);
    CHECK(joiner_duration_s(c) == 30);
}

TEST_CASE("validation accepts a well-formed call") {
    CHECK_NOTHROW(validate_call(two_person_call(), 86400));
}

TEST_CASE("validation rejects malformed calls") {
    auto expect_bad = [](CallRecord c) {
        CHECK_THROWS_AS(validate_call(c, 86400), InvariantViolation);
    };
    {
        CallRecord c = two_person_call();
        c.events[2].action = EventAction::Join;
        c.events[2].participant = 0;  // double join
        expect_bad(c);
    }
    {
        CallRecord c = two_person_call();
        c.events[0].action = EventAction::Leave;  // leave before join
        expect_bad(c);
    }
    {
        CallRecord c = two_person_call();
        std::swap(c.events[2], c.events[5]);  // out of time order
        expect_bad(c);
    }
    {
        CallRecord c = two_person_call();
        c.events[3].mbps = 0.0f;  // non-positive bitrate
        expect_bad(c);
    }
    {
        CallRecord c = two_person_call();
        c.events[4].kind = MediaKind::ScreenShare;  // quality change, no stream
        expect_bad(c);
    }
    {
        CallRecord c = two_person_call();
        c.end_s = 50;  // end before start
        expect_bad(c);
    }
    {
        CallRecord c = two_person_call();
        c.events[1].participant = 5;  // out of range
        expect_bad(c);
    }
}

TEST_CASE("duplicate call ids are rejected at trace level") {
    CallTrace t;
    t.calls = {two_person_call(), two_person_call()};
    CHECK_THROWS_AS(validate_trace(t), InvariantViolation);
}

TEST_CASE("save then load then save is byte-identical") {
    CallTrace t;
    t.duration_s = 86400;
    t.seed = 99;
    t.calls.push_back(two_person_call());
    CallRecord other = two_person_call();
    other.call_id = "c00000002";
    other.series_id = "";  // non-recurring: null in the file
    t.calls.push_back(other);

    const std::string p1 = "trace_rt1.jsonl", p2 = "trace_rt2.jsonl";
    save_trace(t, p1);
    const CallTrace loaded = load_trace(p1);
    save_trace(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(loaded.duration_s == t.duration_s);
    CHECK(loaded.seed == t.seed);
    REQUIRE(loaded.calls.size() == 2);
    CHECK(loaded.calls[0].series_id == "s0000001");
    CHECK(loaded.calls[1].series_id.empty());
    CHECK(loaded.calls[0].events.size() == t.calls[0].events.size());
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("loader rejects bad input") {
    auto write = [](const std::string& path, const std::string& text) {
        std::ofstream f(path, std::ios::binary);
        f << text;
    };
    const std::string p = "trace_bad.jsonl";
    write(p, "not json\n");
    CHECK_THROWS_AS(load_trace(p), MalformedLine);
    write(p, "{\"format\":\"callpack-trace\",\"version\":1,\"duration_s\":100,\"seed\":0}\n"
             "{\"call_id\":\"x\"}\n");
    CHECK_THROWS_AS(load_trace(p), MalformedLine);
    write(p, "{\"format\":\"something-else\",\"version\":1,\"duration_s\":100,\"seed\":0}\n");
    CHECK_THROWS_AS(load_trace(p), MalformedLine);
    std::remove(p.c_str());
    CHECK_THROWS_AS(load_trace("no_such_file.jsonl"), TraceIoError);
}
