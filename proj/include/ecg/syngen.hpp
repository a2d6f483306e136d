#pragma once

#include <array>
#include <string>
#include <vector>

#include "ecg/geometry.hpp"
#include "ecg/raster.hpp"
#include "ecg/rng.hpp"

namespace ecg::syngen {

// Canonical class order, fixed artifact-wide.
inline constexpr std::array<const char*, 5> kClassNames = {"MI", "STTC", "CD", "HYP", "AF"};
using LabelVector = std::array<int, 5>;
enum ClassIndex { kMI = 0, kSTTC = 1, kCD = 2, kHYP = 3, kAF = 4 };

struct GenConfig {
    int n = 100;
    uint64_t seed = 0;
    int paper_w = 192;
    int paper_h = 144;
    int canvas_w = 288;
    int canvas_h = 224;
    double max_tilt_deg = 15.0;
    double contrast_low = 0.7;
    double contrast_high = 1.3;
    double noise_std = 0.02;
    int blur_radius = 1;
    std::array<double, 5> class_priors = {0.3, 0.3, 0.3, 0.3, 0.3};

    void validate() const; // includes the paper-fits-canvas-under-tilt check
};

struct GroundTruth {
    LabelVector labels{};
    raster::BinaryMask mask;                  // trace ink on the un-warped paper
    std::array<geometry::Point2, 4> corners;  // warped paper corners on the canvas (TL,TR,BR,BL)
    std::array<geometry::Point2, 4> paper_region; // same quad, kept as the region polygon
};

// One synthetic lead: uniformly sampled voltage trace.
struct Waveform {
    std::vector<double> samples; // kWaveformLen samples spanning kLeadSeconds
};

inline constexpr int kWaveformLen = 1024;
inline constexpr double kLeadSeconds = 2.56;
inline constexpr int kNumLeads = 12;

// Label-conditioned morphology:
//   MI   -> Q bump sign flipped and ST segment elevated
//   STTC -> T bump amplitude inverted
//   CD   -> QRS bump widths x1.8
//   HYP  -> QRS bump amplitudes x1.7
//   AF   -> beat intervals uniform(0.5, 1.5) x base (interval CV ~0.29) and no P bump
std::array<Waveform, kNumLeads> gen_waveforms(const LabelVector& labels, rng::Xoshiro256pp& gen);

// White paper with light-red grid and the 12 traces in a 3x4 layout
// (column-major lead order), dark anti-aliased strokes; mask true where ink
// coverage exceeds 50%.
std::pair<raster::Raster, raster::BinaryMask> render_paper(
    const std::array<Waveform, kNumLeads>& waveforms, const GenConfig& cfg,
    rng::Xoshiro256pp& gen);

// Places the paper on a dark canvas under a random tilt/perspective
// homography, then multiplicative contrast field, box blur, and Gaussian
// pixel noise (shared across channels). max_tilt_deg == 0 degenerates to an
// axis-aligned copy at an integer offset.
std::pair<raster::Raster, GroundTruth> photograph(const raster::Raster& paper,
                                                  const GenConfig& cfg, rng::Xoshiro256pp& gen,
                                                  const LabelVector& labels = {},
                                                  raster::BinaryMask mask = {});

// Generates cfg.n samples into out_dir (canvas PPM + mask PGM + manifest.json
// array of records) plus a gen_meta.json carrying the config and its hash.
// Returns the manifest path. Fully determined by (cfg, seed).
std::string gen_dataset(const GenConfig& cfg, const std::string& out_dir);

// Canonical JSON round-trip for configs; parsing rejects unknown keys.
std::string gen_config_canonical_json(const GenConfig& cfg);
GenConfig gen_config_from_json_text(const std::string& text);

// Hand-crafted per-lead features used by the learnability probe and the
// morphology tests: QRS half-height width (s), QRS peak amplitude, ST offset,
// T extremum (signed), P-window energy, inter-beat interval CV.
struct WaveformFeatures {
    double qrs_width = 0.0;
    double qrs_amp = 0.0;
    double st_offset = 0.0;
    double t_extremum = 0.0;
    double p_energy = 0.0;
    double interval_cv = 0.0;
};

WaveformFeatures measure_features(const Waveform& lead);

} // namespace ecg::syngen
