#ifndef CALLPACK_TRACE_HPP
#define CALLPACK_TRACE_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace callpack {

enum class MediaKind : std::uint8_t { Audio, Video, ScreenShare };

enum class EventAction : std::uint8_t {
    Join,
    Leave,
    MediaStart,
    MediaStop,
    MediaQualityChange,
};

inline bool is_media_action(EventAction a) {
    return a == EventAction::MediaStart || a == EventAction::MediaStop ||
           a == EventAction::MediaQualityChange;
}

// Participant ids are interned per call; `participant` indexes
// CallRecord::participants. Keeps event records at 16 bytes.
struct ParticipantEvent {
    std::int32_t time_s = 0;
    std::int32_t participant = 0;
    EventAction action = EventAction::Join;
    MediaKind kind = MediaKind::Audio;  // media actions only
    float mbps = 0.0f;                  // media actions only
};

struct CallRecord {
    std::string call_id;
    std::string series_id;  // empty when not part of a recurring series
    std::int64_t start_s = 0;
    std::int64_t end_s = 0;
    std::vector<std::string> participants;
    std::vector<ParticipantEvent> events;
};

struct CallTrace {
    std::int64_t duration_s = 86400;
    std::uint64_t seed = 0;
    std::vector<CallRecord> calls;
};

struct TraceIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedLine : std::runtime_error {
    int line_no;
    MalformedLine(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what),
          line_no(line) {}
};

struct InvariantViolation : std::runtime_error {
    std::string call_id;
    InvariantViolation(std::string id, const std::string& reason)
        : std::runtime_error("call " + id + ": " + reason), call_id(std::move(id)) {}
};

// Peak concurrent participants over the call's lifetime.
inline int max_participants(const CallRecord& call) {
    int cur = 0, peak = 0;
    for (const auto& ev : call.events) {
        if (ev.action == EventAction::Join) {
            if (++cur > peak) peak = cur;
        } else if (ev.action == EventAction::Leave) {
            --cur;
        }
    }
    return peak;
}

// Seconds between the first and the last join.
inline std::int64_t joiner_duration_s(const CallRecord& call) {
    std::int64_t first = -1, last = -1;
    for (const auto& ev : call.events) {
        if (ev.action != EventAction::Join) continue;
        if (first < 0) first = ev.time_s;
        last = ev.time_s;
    }
    return first < 0 ? 0 : last - first;
}

inline void validate_call(const CallRecord& call, std::int64_t duration_s) {
    auto fail = [&](const std::string& reason) {
        throw InvariantViolation(call.call_id, reason);
    };
    if (call.start_s < 0 || call.end_s < call.start_s) fail("bad start/end");
    if (!call.events.empty()) {
        if (call.events.front().time_s < call.start_s) fail("event before start_s");
        if (call.events.back().time_s > call.end_s) fail("event after end_s");
    }
    if (call.end_s >= duration_s + 0 && !call.events.empty() &&
        call.events.back().time_s >= duration_s)
        fail("event time beyond trace duration");

    std::int64_t prev_t = call.start_s;
    // per-participant state: 0 = out, 1 = joined; plus active stream kinds
    std::vector<int> joined(call.participants.size(), 0);
    std::vector<std::set<int>> streams(call.participants.size());
    int count = 0;
    for (const auto& ev : call.events) {
        if (ev.time_s < prev_t) fail("events not time-ordered");
        prev_t = ev.time_s;
        if (ev.participant < 0 ||
            std::size_t(ev.participant) >= call.participants.size())
            fail("participant index out of range");
        auto& j = joined[ev.participant];
        auto& st = streams[ev.participant];
        switch (ev.action) {
            case EventAction::Join:
                if (j) fail("double join");
                j = 1;
                ++count;
                break;
            case EventAction::Leave:
                if (!j) fail("leave before join");
                j = 0;
                st.clear();
                --count;
                break;
            case EventAction::MediaStart:
                if (!j) fail("media start while not joined");
                if (!st.insert(int(ev.kind)).second) fail("duplicate media start");
                if (ev.mbps <= 0.0f) fail("non-positive bitrate");
                break;
            case EventAction::MediaStop:
                if (!st.erase(int(ev.kind))) fail("media stop for inactive stream");
                break;
            case EventAction::MediaQualityChange:
                if (!st.count(int(ev.kind))) fail("quality change for inactive stream");
                if (ev.mbps <= 0.0f) fail("non-positive bitrate");
                break;
        }
        if (count < 0) fail("negative participant count");
    }
}

inline void validate_trace(const CallTrace& trace) {
    std::set<std::string_view> ids;
    for (const auto& call : trace.calls) {
        if (!ids.insert(call.call_id).second)
            throw InvariantViolation(call.call_id, "duplicate call_id");
        validate_call(call, trace.duration_s);
    }
}

namespace detail {

inline void json_escape_to(std::string& out, std::string_view s) {
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
}

inline const char* action_name(EventAction a) {
    switch (a) {
        case EventAction::Join: return "join";
        case EventAction::Leave: return "leave";
        case EventAction::MediaStart: return "mstart";
        case EventAction::MediaStop: return "mstop";
        case EventAction::MediaQualityChange: return "mqual";
    }
    return "?";
}

inline const char* kind_name(MediaKind k) {
    switch (k) {
        case MediaKind::Audio: return "audio";
        case MediaKind::Video: return "video";
        case MediaKind::ScreenShare: return "ss";
    }
    return "?";
}

}  // namespace detail

// Serializes one call as a single JSON line. Keys are emitted in sorted
// order and bitrates use fixed 4-decimal formatting so the same trace
// always produces identical bytes.
inline void append_call_line(std::string& out, const CallRecord& call) {
    out += "{\"call_id\":\"";
    detail::json_escape_to(out, call.call_id);
    out += "\",\"end_s\":";
    out += std::to_string(call.end_s);
    out += ",\"events\":[";
    bool first = true;
    char buf[32];
    for (const auto& ev : call.events) {
        if (!first) out += ',';
        first = false;
        out += "{\"a\":\"";
        out += detail::action_name(ev.action);
        out += "\",\"kind\":";
        if (is_media_action(ev.action)) {
            out += '"';
            out += detail::kind_name(ev.kind);
            out += '"';
        } else {
            out += "null";
        }
        out += ",\"mbps\":";
        if (is_media_action(ev.action) && ev.action != EventAction::MediaStop) {
            std::snprintf(buf, sizeof buf, "%.4f", double(ev.mbps));
            out += buf;
        } else {
            out += "null";
        }
        out += ",\"p\":\"";
        detail::json_escape_to(out, call.participants[ev.participant]);
        out += "\",\"t\":";
        out += std::to_string(ev.time_s);
        out += '}';
    }
    out += "],\"series_id\":";
    if (call.series_id.empty()) {
        out += "null";
    } else {
        out += '"';
        detail::json_escape_to(out, call.series_id);
        out += '"';
    }
    out += ",\"start_s\":";
    out += std::to_string(call.start_s);
    out += "}\n";
}

inline void save_trace(const CallTrace& trace, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw TraceIoError("cannot open for writing: " + path);
    std::string buf;
    buf.reserve(1 << 20);
    buf += "{\"duration_s\":";
    buf += std::to_string(trace.duration_s);
    buf += ",\"format\":\"callpack-trace\",\"seed\":";
    buf += std::to_string(trace.seed);
    buf += ",\"version\":1}\n";
    for (const auto& call : trace.calls) {
        append_call_line(buf, call);
        if (buf.size() > (1 << 20)) {
            f.write(buf.data(), std::streamsize(buf.size()));
            buf.clear();
        }
    }
    f.write(buf.data(), std::streamsize(buf.size()));
    if (!f) throw TraceIoError("write failed: " + path);
}

inline CallRecord parse_call_line(const nlohmann::json& j, int line_no) {
    CallRecord call;
    try {
        call.call_id = j.at("call_id").get<std::string>();
        if (!j.at("series_id").is_null())
            call.series_id = j.at("series_id").get<std::string>();
        call.start_s = j.at("start_s").get<std::int64_t>();
        call.end_s = j.at("end_s").get<std::int64_t>();
        std::map<std::string, std::int32_t> interned;
        for (const auto& je : j.at("events")) {
            ParticipantEvent ev;
            ev.time_s = je.at("t").get<std::int32_t>();
            const auto p = je.at("p").get<std::string>();
            auto [it, inserted] =
                interned.emplace(p, std::int32_t(call.participants.size()));
            if (inserted) call.participants.push_back(p);
            ev.participant = it->second;
            const auto a = je.at("a").get<std::string>();
            if (a == "join") ev.action = EventAction::Join;
            else if (a == "leave") ev.action = EventAction::Leave;
            else if (a == "mstart") ev.action = EventAction::MediaStart;
            else if (a == "mstop") ev.action = EventAction::MediaStop;
            else if (a == "mqual") ev.action = EventAction::MediaQualityChange;
            else throw MalformedLine(line_no, "unknown action " + a);
            if (is_media_action(ev.action)) {
                const auto k = je.at("kind").get<std::string>();
                if (k == "audio") ev.kind = MediaKind::Audio;
                else if (k == "video") ev.kind = MediaKind::Video;
                else if (k == "ss") ev.kind = MediaKind::ScreenShare;
                else throw MalformedLine(line_no, "unknown media kind " + k);
                if (ev.action != EventAction::MediaStop)
                    ev.mbps = je.at("mbps").get<float>();
            }
            call.events.push_back(ev);
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedLine(line_no, e.what());
    }
    return call;
}

inline CallTrace load_trace(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw TraceIoError("cannot open: " + path);
    CallTrace trace;
    std::string line;
    int line_no = 0;
    if (!std::getline(f, line)) throw MalformedLine(1, "missing header line");
    ++line_no;
    {
        nlohmann::json h = nlohmann::json::parse(line, nullptr, false);
        if (h.is_discarded() || !h.is_object() ||
            h.value("format", "") != "callpack-trace" || h.value("version", 0) != 1)
            throw MalformedLine(1, "bad trace header");
        trace.duration_s = h.at("duration_s").get<std::int64_t>();
        trace.seed = h.at("seed").get<std::uint64_t>();
    }
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw MalformedLine(line_no, "not a JSON object");
        trace.calls.push_back(parse_call_line(j, line_no));
    }
    validate_trace(trace);
    return trace;
}

}  // namespace callpack

#endif  // CALLPACK_TRACE_HPP
