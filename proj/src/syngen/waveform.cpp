#include <algorithm>
#include <cmath>

#include "ecg/syngen.hpp"

namespace ecg::syngen {

namespace {

constexpr double kBaseInterval = 0.80; // seconds between beats
constexpr double kDt = kLeadSeconds / kWaveformLen;

// fixed per-lead gains; lead 0 is the reference lead for measurements
constexpr std::array<double, kNumLeads> kLeadGain = {1.00, 0.85, 0.70, 0.92, 0.78, 0.88,
                                                     0.65, 0.95, 0.82, 0.75, 0.90, 0.68};

struct BeatShape {
    double p_amp = 0.15, p_off = -0.18, p_sigma = 0.025;
    double q_amp = -0.12, q_off = -0.040, q_sigma = 0.012;
    double r_amp = 1.00, r_off = 0.0, r_sigma = 0.016;
    double s_amp = -0.20, s_off = 0.040, s_sigma = 0.014;
    double t_amp = 0.35, t_off = 0.24, t_sigma = 0.055;
    double st_offset = 0.0; // plateau amplitude over [t+0.06, t+0.17]
};

BeatShape shape_for(const LabelVector& labels) {
    BeatShape s;
    if (labels[kMI]) {
        s.q_amp = -s.q_amp;
        s.st_offset = 0.25;
    }
    if (labels[kSTTC]) s.t_amp = -s.t_amp;
    if (labels[kCD]) {
        s.q_sigma *= 1.8;
        s.r_sigma *= 1.8;
        s.s_sigma *= 1.8;
    }
    if (labels[kHYP]) {
        s.q_amp *= 1.7;
        s.r_amp *= 1.7;
        s.s_amp *= 1.7;
    }
    if (labels[kAF]) s.p_amp = 0.0;
    return s;
}

inline double bump(double t, double center, double sigma, double amp) {
    double d = (t - center) / sigma;
    return amp * std::exp(-0.5 * d * d);
}

inline double smooth_box(double t, double lo, double hi, double edge) {
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    return sig((t - lo) / edge) - sig((t - hi) / edge);
}

} // namespace

std::array<Waveform, kNumLeads> gen_waveforms(const LabelVector& labels,
                                              rng::Xoshiro256pp& gen) {
    BeatShape shape = shape_for(labels);
    bool af = labels[kAF] != 0;

    // shared beat times across leads (one heart)
    std::vector<double> beats;
    double t = 0.35 + gen.uniform(-0.05, 0.05);
    while (t < kLeadSeconds + 0.4) {
        beats.push_back(t);
        double factor = af ? gen.uniform(0.5, 1.5) : gen.uniform(0.97, 1.03);
        t += kBaseInterval * factor;
    }

    std::array<Waveform, kNumLeads> leads;
    for (int lead = 0; lead < kNumLeads; ++lead) {
        double wander_freq = gen.uniform(0.5, 1.5);
        double wander_phase = gen.uniform(0.0, 6.283185307179586);
        Waveform& wf = leads[size_t(lead)];
        wf.samples.resize(kWaveformLen);
        for (int i = 0; i < kWaveformLen; ++i) {
            double x = i * kDt;
            double v = 0.0;
            for (double tb : beats) {
                if (x < tb - 0.45 || x > tb + 0.45) continue;
                v += bump(x, tb + shape.p_off, shape.p_sigma, shape.p_amp);
                v += bump(x, tb + shape.q_off, shape.q_sigma, shape.q_amp);
                v += bump(x, tb + shape.r_off, shape.r_sigma, shape.r_amp);
                v += bump(x, tb + shape.s_off, shape.s_sigma, shape.s_amp);
                v += bump(x, tb + shape.t_off, shape.t_sigma, shape.t_amp);
                if (shape.st_offset != 0.0)
                    v += shape.st_offset * smooth_box(x, tb + 0.06, tb + 0.17, 0.01);
            }
            v += 0.02 * std::sin(6.283185307179586 * (wander_freq * x / kLeadSeconds) + wander_phase);
            wf.samples[size_t(i)] = v * kLeadGain[size_t(lead)];
        }
        // per-sample acquisition noise
        for (double& v : wf.samples) v += gen.normal() * 0.008 * kLeadGain[size_t(lead)];
    }
    return leads;
}

WaveformFeatures measure_features(const Waveform& lead) {
    const std::vector<double>& x = lead.samples;
    int n = int(x.size());

    // R peaks: local maxima above 55% of the global max, >= 0.3 s apart
    double global_max = *std::max_element(x.begin(), x.end());
    double floor = 0.55 * global_max;
    int min_sep = int(0.30 / kDt);
    std::vector<int> peaks;
    for (int i = 1; i + 1 < n; ++i) {
        if (x[size_t(i)] < floor) continue;
        if (x[size_t(i)] < x[size_t(i) - 1] || x[size_t(i)] < x[size_t(i) + 1]) continue;
        if (!peaks.empty() && i - peaks.back() < min_sep) {
            if (x[size_t(i)] > x[size_t(peaks.back())]) peaks.back() = i;
            continue;
        }
        peaks.push_back(i);
    }

    WaveformFeatures f;
    if (peaks.empty()) return f;

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };

    std::vector<double> widths, amps, st, tex, pen;
    for (int p : peaks) {
        double peak = x[size_t(p)];
        double half = peak * 0.5;
        // half-height crossings with linear interpolation
        int l = p;
        while (l > 0 && x[size_t(l)] > half) --l;
        int r = p;
        while (r + 1 < n && x[size_t(r)] > half) ++r;
        if (l == 0 || r == n - 1) continue;
        double lf = l + (half - x[size_t(l)]) / (x[size_t(l) + 1] - x[size_t(l)]);
        double rf = r - (half - x[size_t(r)]) / (x[size_t(r) - 1] - x[size_t(r)]);
        widths.push_back((rf - lf) * kDt);
        amps.push_back(peak);

        auto window_ok = [&](double lo, double hi) {
            return p + int(lo / kDt) >= 0 && p + int(hi / kDt) < n;
        };
        if (window_ok(0.10, 0.15)) {
            double acc = 0.0;
            int cnt = 0;
            for (int i = p + int(0.10 / kDt); i <= p + int(0.15 / kDt); ++i, ++cnt)
                acc += x[size_t(i)];
            st.push_back(acc / cnt);
        }
        if (window_ok(0.18, 0.32)) {
            double best = 0.0;
            for (int i = p + int(0.18 / kDt); i <= p + int(0.32 / kDt); ++i)
                if (std::abs(x[size_t(i)]) > std::abs(best)) best = x[size_t(i)];
            tex.push_back(best);
        }
        if (window_ok(-0.22, -0.13)) {
            double acc = 0.0;
            int cnt = 0;
            for (int i = p + int(-0.22 / kDt); i <= p + int(-0.13 / kDt); ++i, ++cnt)
                acc += x[size_t(i)] * x[size_t(i)];
            pen.push_back(acc / cnt);
        }
    }

    if (!widths.empty()) f.qrs_width = median(widths);
    if (!amps.empty()) f.qrs_amp = median(amps);
    if (!st.empty()) f.st_offset = median(st);
    if (!tex.empty()) f.t_extremum = median(tex);
    if (!pen.empty()) f.p_energy = median(pen);

    if (peaks.size() >= 3) {
        std::vector<double> intervals;
        for (size_t i = 1; i < peaks.size(); ++i)
            intervals.push_back((peaks[i] - peaks[i - 1]) * kDt);
        double mean = 0.0;
        for (double v : intervals) mean += v;
        mean /= double(intervals.size());
        double var = 0.0;
        for (double v : intervals) var += (v - mean) * (v - mean);
        var /= double(intervals.size());
        f.interval_cv = std::sqrt(var) / mean;
    }
    return f;
}

} // namespace ecg::syngen
