// Severity-parameterized motion sampling, synthetic skull, and the full
// image corruption pipeline: splice the pre-motion spectrum with the
// spectrum of the rotated-then-shifted object at a sampled profile index.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mrseg/errors.hpp"
#include "mrseg/fft.hpp"
#include "mrseg/rng.hpp"
#include "mrseg/tensor.hpp"

namespace mrseg {

struct MotionBounds {
    int max_translation_px = 0;
    int max_rotation_deg = 0;
};

// Minimal: no changes. Mild: +-2px / +-1 deg. Moderate: +-3px / +-2 deg.
// Severe: +-4px / +-3 deg.
inline MotionBounds severity_bounds(Severity category) {
    switch (category) {
        case Severity::Minimal: return {0, 0};
        case Severity::Mild: return {2, 1};
        case Severity::Moderate: return {3, 2};
        case Severity::Severe: return {4, 3};
    }
    throw ValidationError("unknown severity category");
}

// One motion event: the object holds still, moves once at event_profile,
// and holds the new pose for the rest of the readout.
struct MotionTrajectory {
    Shift2D shift;
    RotationAngle angle;
    int event_profile = 0;
};

// Translation and rotation are drawn continuously within the category's
// bounds. The event lands uniformly in the central 60% of profiles: motion
// at the very edges of k-space is nearly invisible. Minimal returns the
// identity trajectory with event_profile = H.
inline MotionTrajectory sample_trajectory(Severity category, int height, Pcg32& rng) {
    if (height < 4) throw ValidationError("sample_trajectory: height must be >= 4");
    MotionBounds b = severity_bounds(category);
    if (category == Severity::Minimal) {
        return {{0.0, 0.0}, RotationAngle{0.0}, height};
    }
    double t = b.max_translation_px;
    double r = b.max_rotation_deg;
    MotionTrajectory traj;
    traj.shift.dx = rng.uniform(-t, t);
    traj.shift.dy = rng.uniform(-t, t);
    traj.angle = RotationAngle::of(rng.uniform(-r, r));
    int lo = static_cast<int>(std::floor(0.2 * height));
    int hi = static_cast<int>(std::floor(0.8 * height));
    traj.event_profile = lo + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(hi - lo)));
    return traj;
}

struct SkullConfig {
    int thickness = 3;       // ring thickness in pixels
    double intensity = 1.3;  // multiplier on the 99th in-brain percentile
    int gap = 2;             // pixels between brain boundary and inner edge
};

namespace detail {

// Felzenszwalb-Huttenlocher 1D squared-distance transform.
inline void dt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
    int n = static_cast<int>(f.size());
    d.resize(n);
    v.assign(n, 0);
    z.assign(n + 1, 0.0);
    int k = 0;
    v[0] = 0;
    z[0] = -1e20;
    z[1] = 1e20;
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
            if (s <= z[k]) --k;
            else break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = 1e20;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        d[q] = (q - v[k]) * (q - v[k]) + f[v[k]];
    }
}

// Exact Euclidean distance (pixels) from each cell to the nearest set pixel.
inline std::vector<double> distance_to_mask(const MaskGrid& mask) {
    int h = mask.height, w = mask.width;
    std::vector<double> grid(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = mask.data[i] ? 0.0 : 1e20;
    std::vector<double> f, d, z;
    std::vector<int> v;
    f.resize(h);
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) f[r] = grid[static_cast<std::size_t>(r) * w + c];
        dt_1d(f, d, v, z);
        for (int r = 0; r < h; ++r) grid[static_cast<std::size_t>(r) * w + c] = d[r];
    }
    f.resize(w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) f[c] = grid[static_cast<std::size_t>(r) * w + c];
        dt_1d(f, d, v, z);
        for (int c = 0; c < w; ++c) grid[static_cast<std::size_t>(r) * w + c] = d[c];
    }
    for (auto& x : grid) x = std::sqrt(x);
    return grid;
}

inline double percentile_99(std::vector<float> vals) {
    std::sort(vals.begin(), vals.end());
    std::size_t idx = static_cast<std::size_t>(0.99 * (vals.size() - 1) + 0.5);
    return vals[std::min(idx, vals.size() - 1)];
}

}  // namespace detail

// Paints a skull-like ring around the brain: pixels whose distance to the
// brain mask lies in (gap, gap + thickness] get intensity * p99 of the
// in-brain intensities. Pixels inside the brain are untouched.
inline Image2D add_skull(const Image2D& image, const MaskGrid& brain_mask, const SkullConfig& cfg) {
    if (image.height != brain_mask.height || image.width != brain_mask.width) {
        throw ShapeError("add_skull: image/mask shape mismatch");
    }
    std::vector<float> in_brain;
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        if (brain_mask.data[i]) in_brain.push_back(image.data[i]);
    }
    if (in_brain.empty()) throw ValidationError("add_skull: empty brain mask");
    float ring_value = static_cast<float>(cfg.intensity * detail::percentile_99(std::move(in_brain)));
    std::vector<double> dist = detail::distance_to_mask(brain_mask);
    Image2D out = image;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (dist[i] > cfg.gap && dist[i] <= cfg.gap + cfg.thickness) out.data[i] = ring_value;
    }
    return out;
}

// Fig-2-style corruption: the acquired k-space is the row-wise splice of the
// still object's spectrum and the moved object's spectrum. The moved branch
// rotates in the image domain first, then applies the translation as a phase
// ramp. Ground-truth labels are never transformed.
inline Image2D corrupt_image(const Image2D& image, const MotionTrajectory& traj) {
    ComplexGrid pre = fft2d(image);
    ComplexGrid post = translate_kspace(fft2d(rotate_image(image, traj.angle)), traj.shift);
    return ifft2d(splice_kspace(pre, post, traj.event_profile));
}

inline double rmse(const Image2D& a, const Image2D& b) {
    if (a.height != b.height || a.width != b.width) throw ShapeError("rmse: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.data.size()));
}

}  // namespace mrseg
