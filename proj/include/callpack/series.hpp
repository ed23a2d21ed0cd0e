#ifndef CALLPACK_SERIES_HPP
#define CALLPACK_SERIES_HPP

#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace callpack {

// What one finished occurrence of a recurring series contributes to history:
// the participant peak and the per-kind peak stream counts with their rates.
struct OccurrenceSummary {
    double peak_participants = 0.0;
    double audio_streams = 0.0;
    double video_streams = 0.0;
    double ss_streams = 0.0;
    double audio_mbps = 0.0;
    double video_mbps = 0.0;
    double ss_mbps = 0.0;

    double sum_stream_mbps() const {
        return audio_streams * audio_mbps + video_streams * video_mbps +
               ss_streams * ss_mbps;
    }
};

// In-process stand-in for the recurring-calls DB. Keeps the last
// kRetention occurrences per series, oldest first.
class SeriesStore {
public:
    static constexpr std::size_t kRetention = 10;

    void record(const std::string& series_id, const OccurrenceSummary& occ) {
        auto& hist = store_[series_id];
        hist.push_back(occ);
        if (hist.size() > kRetention)
            hist.erase(hist.begin(), hist.begin() + (hist.size() - kRetention));
    }

    // Ordered oldest -> newest; empty when the series is unknown.
    std::vector<OccurrenceSummary> history(const std::string& series_id) const {
        auto it = store_.find(series_id);
        return it == store_.end() ? std::vector<OccurrenceSummary>{} : it->second;
    }

    std::size_t size() const { return store_.size(); }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open for writing: " + path);
        // std::map keeps keys sorted, so output is deterministic.
        f << "{";
        bool first_series = true;
        char buf[32];
        auto num = [&](double v) {
            std::snprintf(buf, sizeof buf, "%.4f", v);
            return std::string(buf);
        };
        for (const auto& [id, hist] : store_) {
            if (!first_series) f << ",";
            first_series = false;
            f << "\n\"" << id << "\":[";
            bool first = true;
            for (const auto& o : hist) {
                if (!first) f << ",";
                first = false;
                f << "{\"audio\":" << num(o.audio_streams)
                  << ",\"audio_mbps\":" << num(o.audio_mbps)
                  << ",\"peak\":" << num(o.peak_participants)
                  << ",\"ss\":" << num(o.ss_streams)
                  << ",\"ss_mbps\":" << num(o.ss_mbps)
                  << ",\"video\":" << num(o.video_streams)
                  << ",\"video_mbps\":" << num(o.video_mbps) << "}";
            }
            f << "]";
        }
        f << "\n}\n";
    }

    static SeriesStore load(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open: " + path);
        nlohmann::json j;
        f >> j;
        SeriesStore s;
        for (auto it = j.begin(); it != j.end(); ++it) {
            auto& hist = s.store_[it.key()];
            for (const auto& jo : it.value()) {
                OccurrenceSummary o;
                o.audio_streams = jo.at("audio").get<double>();
                o.audio_mbps = jo.at("audio_mbps").get<double>();
                o.peak_participants = jo.at("peak").get<double>();
                o.ss_streams = jo.at("ss").get<double>();
                o.ss_mbps = jo.at("ss_mbps").get<double>();
                o.video_streams = jo.at("video").get<double>();
                o.video_mbps = jo.at("video_mbps").get<double>();
                hist.push_back(o);
            }
        }
        return s;
    }

    bool operator==(const SeriesStore& other) const {
        if (store_.size() != other.store_.size()) return false;
        for (const auto& [id, hist] : store_) {
            auto it = other.store_.find(id);
            if (it == other.store_.end() || it->second.size() != hist.size())
                return false;
            for (std::size_t i = 0; i < hist.size(); ++i) {
                const auto& a = hist[i];
                const auto& b = it->second[i];
                if (a.peak_participants != b.peak_participants ||
                    a.audio_streams != b.audio_streams ||
                    a.video_streams != b.video_streams ||
                    a.ss_streams != b.ss_streams || a.audio_mbps != b.audio_mbps ||
                    a.video_mbps != b.video_mbps || a.ss_mbps != b.ss_mbps)
                    return false;
            }
        }
        return true;
    }

private:
    std::map<std::string, std::vector<OccurrenceSummary>> store_;
};

}  // namespace callpack

#endif  // CALLPACK_SERIES_HPP
