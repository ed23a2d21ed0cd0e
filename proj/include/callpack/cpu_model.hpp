#ifndef CALLPACK_CPU_MODEL_HPP
#define CALLPACK_CPU_MODEL_HPP

#include <string>
#include <vector>

namespace callpack {

// CPU multiplier of a hardware class relative to the reference SKU (1.0).
// A ratio above 1 means the same call costs more CPU on this SKU.
struct SkuProfile {
    std::string sku_id = "ref";
    double perf_ratio = 1.0;
};

// CPU is linear in total traffic handled; the superlinear growth with call
// size is carried by the out-traffic term (every stream fans out to N-1
// receivers). Utilization is never clamped at 100.
struct CpuModelParams {
    double base_pct_per_call = 0.05;  // fixed overhead while the call has >= 1 participant
    double pct_per_mbps = 0.1553;     // ~35% for a 15-participant all-video call at 1 Mbps
};

struct TrafficMbps {
    double in_mbps = 0.0;
    double out_mbps = 0.0;
    double total() const { return in_mbps + out_mbps; }
};

// Aggregate media state of one call: participant count and the sum of all
// active stream bitrates. Fractional participants are allowed so that
// predictor estimates can stay continuous.
inline TrafficMbps call_traffic_mbps(double participants, double sum_stream_mbps) {
    TrafficMbps t;
    t.in_mbps = sum_stream_mbps;
    t.out_mbps = participants > 1.0 ? sum_stream_mbps * (participants - 1.0) : 0.0;
    return t;
}

inline double call_cpu_pct(double participants, double sum_stream_mbps,
                           const CpuModelParams& params, const SkuProfile& sku) {
    if (participants < 1.0) return 0.0;
    const TrafficMbps t = call_traffic_mbps(participants, sum_stream_mbps);
    return (params.base_pct_per_call + params.pct_per_mbps * t.total()) * sku.perf_ratio;
}

struct CallLoad {
    double participants = 0.0;
    double sum_stream_mbps = 0.0;
};

// An MP's CPU is the plain sum over its hosted calls.
inline double mp_cpu_pct(const std::vector<CallLoad>& calls,
                         const CpuModelParams& params, const SkuProfile& sku) {
    double total = 0.0;
    for (const auto& c : calls) total += call_cpu_pct(c.participants, c.sum_stream_mbps, params, sku);
    return total;
}

}  // namespace callpack

#endif  // CALLPACK_CPU_MODEL_HPP
