#ifndef CALLPACK_CLUSTER_HPP
#define CALLPACK_CLUSTER_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "callpack/cpu_model.hpp"
#include "callpack/rng.hpp"
#include "callpack/series.hpp"

namespace callpack {

struct SkuMixEntry {
    SkuProfile sku;
    double weight = 1.0;
};

struct ClusterConfig {
    int n_mps = 3000;
    double hot_threshold_pct = 75.0;
    double cap_pct = 75.0;
    int n_virtual_clusters = 4;
    int llr_k = 5;
    std::vector<SkuMixEntry> sku_mix = {
        {{"ref", 1.0}, 0.6}, {{"fast", 0.85}, 0.2}, {{"slow", 1.2}, 0.2}};
};

struct UnknownCall : std::runtime_error {
    explicit UnknownCall(const std::string& id) : std::runtime_error("unknown call " + id) {}
};
struct UnknownMp : std::runtime_error {
    explicit UnknownMp(int id) : std::runtime_error("unknown mp " + std::to_string(id)) {}
};
struct CallNotActive : std::runtime_error {
    explicit CallNotActive(const std::string& id)
        : std::runtime_error("call not active: " + id) {}
};

struct MpState {
    int mp_id = 0;
    SkuProfile sku;
    double cap_pct = 75.0;
    int virtual_cluster_idx = 0;
    std::unordered_set<std::string> hosted_calls;
    // Cached sums over hosted calls, both SKU-adjusted for this MP.
    double current_cpu_pct = 0.0;
    double expected_peak_cpu_pct = 0.0;
};

struct CallState {
    std::string call_id;
    std::string series_id;
    std::int64_t start_s = 0;
    int participants = 0;
    double sum_stream_mbps = 0.0;
    int peak_participants = 0;
    double peak_audio_streams = 0.0, peak_video_streams = 0.0, peak_ss_streams = 0.0;
    double cur_audio = 0.0, cur_video = 0.0, cur_ss = 0.0;  // live stream counts
    // Reference-SKU values; multiply by the host's perf ratio for MP-local CPU.
    double measured_cpu_ref = 0.0;
    double estimated_peak_cpu_ref = 0.0;
    int assigned_mp = -1;
    int last_migration_round = -1000000;
    bool is_recurring_predicted = false;

    std::int64_t age_s(std::int64_t now) const { return now - start_s; }
};

// Single-writer live state: MPs, active calls, recurring-series history.
class Cluster {
public:
    Cluster(const ClusterConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        if (cfg.n_mps <= 0) throw std::runtime_error("invalid config: n_mps must be > 0");
        if (cfg.hot_threshold_pct <= 0 || cfg.hot_threshold_pct > 100)
            throw std::runtime_error("invalid config: hot_threshold_pct out of range");
        if (cfg.n_virtual_clusters < 1) throw std::runtime_error("invalid config: n_virtual_clusters < 1");
        if (cfg.llr_k < 1) throw std::runtime_error("invalid config: llr_k < 1");
        if (cfg.sku_mix.empty()) throw std::runtime_error("invalid config: empty sku mix");

        Rng rng(seed);
        double total_w = 0;
        for (const auto& e : cfg.sku_mix) total_w += e.weight;
        mps_.resize(std::size_t(cfg.n_mps));
        for (int i = 0; i < cfg.n_mps; ++i) {
            auto& mp = mps_[std::size_t(i)];
            mp.mp_id = i;
            mp.cap_pct = cfg.cap_pct;
            double u = rng.uniform01() * total_w;
            mp.sku = cfg.sku_mix.back().sku;
            for (const auto& e : cfg.sku_mix) {
                if (u < e.weight) {
                    mp.sku = e.sku;
                    break;
                }
                u -= e.weight;
            }
            mp.virtual_cluster_idx = int(rng.uniform_int(std::uint64_t(cfg.n_virtual_clusters)));
        }
    }

    const ClusterConfig& config() const { return cfg_; }
    const std::vector<MpState>& mps() const { return mps_; }
    MpState& mp(int id) {
        if (id < 0 || std::size_t(id) >= mps_.size()) throw UnknownMp(id);
        return mps_[std::size_t(id)];
    }
    const MpState& mp(int id) const { return const_cast<Cluster*>(this)->mp(id); }

    std::unordered_map<std::string, CallState>& calls() { return calls_; }
    const std::unordered_map<std::string, CallState>& calls() const { return calls_; }

    CallState& call(const std::string& id) {
        auto it = calls_.find(id);
        if (it == calls_.end()) throw UnknownCall(id);
        return it->second;
    }
    const CallState& call(const std::string& id) const {
        return const_cast<Cluster*>(this)->call(id);
    }

    SeriesStore& series() { return series_; }
    const SeriesStore& series() const { return series_; }

    CallState& add_call(CallState state, int mp_id) {
        auto& mp_ref = mp(mp_id);
        auto [it, inserted] = calls_.emplace(state.call_id, std::move(state));
        if (!inserted) throw std::runtime_error("duplicate call " + it->first);
        CallState& cs = it->second;
        cs.assigned_mp = mp_id;
        mp_ref.hosted_calls.insert(cs.call_id);
        mp_ref.current_cpu_pct += cs.measured_cpu_ref * mp_ref.sku.perf_ratio;
        mp_ref.expected_peak_cpu_pct += cs.estimated_peak_cpu_ref * mp_ref.sku.perf_ratio;
        return cs;
    }

    void remove_call(const std::string& id) {
        auto it = calls_.find(id);
        if (it == calls_.end()) throw UnknownCall(id);
        CallState& cs = it->second;
        auto& m = mp(cs.assigned_mp);
        m.hosted_calls.erase(id);
        m.current_cpu_pct -= cs.measured_cpu_ref * m.sku.perf_ratio;
        m.expected_peak_cpu_pct -= cs.estimated_peak_cpu_ref * m.sku.perf_ratio;
        calls_.erase(it);
    }

    void move_call(const std::string& id, int to_mp, int round) {
        CallState& cs = call(id);
        if (cs.assigned_mp < 0) throw CallNotActive(id);
        auto& from = mp(cs.assigned_mp);
        auto& to = mp(to_mp);
        if (&from == &to) return;
        from.hosted_calls.erase(id);
        from.current_cpu_pct -= cs.measured_cpu_ref * from.sku.perf_ratio;
        from.expected_peak_cpu_pct -= cs.estimated_peak_cpu_ref * from.sku.perf_ratio;
        to.hosted_calls.insert(id);
        to.current_cpu_pct += cs.measured_cpu_ref * to.sku.perf_ratio;
        to.expected_peak_cpu_pct += cs.estimated_peak_cpu_ref * to.sku.perf_ratio;
        cs.assigned_mp = to_mp;
        cs.last_migration_round = round;
    }

    // Adjusts a call's cached loads and keeps the host MP's sums in step.
    void update_call_load(CallState& cs, double measured_cpu_ref, double estimated_ref) {
        auto& m = mp(cs.assigned_mp);
        m.current_cpu_pct += (measured_cpu_ref - cs.measured_cpu_ref) * m.sku.perf_ratio;
        m.expected_peak_cpu_pct +=
            (estimated_ref - cs.estimated_peak_cpu_ref) * m.sku.perf_ratio;
        cs.measured_cpu_ref = measured_cpu_ref;
        cs.estimated_peak_cpu_ref = estimated_ref;
    }

    // Drops incremental float drift; called once per simulated minute.
    void recompute_sums() {
        for (auto& m : mps_) {
            m.current_cpu_pct = 0.0;
            m.expected_peak_cpu_pct = 0.0;
        }
        for (const auto& [id, cs] : calls_) {
            auto& m = mps_[std::size_t(cs.assigned_mp)];
            m.current_cpu_pct += cs.measured_cpu_ref * m.sku.perf_ratio;
            m.expected_peak_cpu_pct += cs.estimated_peak_cpu_ref * m.sku.perf_ratio;
        }
    }

private:
    ClusterConfig cfg_;
    std::vector<MpState> mps_;
    std::unordered_map<std::string, CallState> calls_;
    SeriesStore series_;
};

}  // namespace callpack

#endif  // CALLPACK_CLUSTER_HPP
