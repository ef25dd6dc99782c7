// Synthetic brain-slice phantoms with ground-truth lesion masks: an
// elliptical brain with low-frequency texture, plus a brighter lesion
// ellipse whose boundary is perturbed radially to look irregular.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mrseg/errors.hpp"
#include "mrseg/rng.hpp"
#include "mrseg/tensor.hpp"

namespace mrseg {

struct PhantomConfig {
    int size = 64;                        // square slice side, >= 32
    double brain_radius_min = 0.30;      // fraction of size
    double brain_radius_max = 0.38;
    double lesion_radius_min = 0.15;     // fraction of mean brain radius
    double lesion_radius_max = 0.30;
    double texture_scale = 0.25;         // bump sigma as fraction of brain radius
    double lesion_contrast = 1.8;        // > 1

    void validate() const {
        if (size < 32) throw ValidationError("phantom size must be >= 32");
        if (brain_radius_min > brain_radius_max || brain_radius_max > 0.5) {
            throw ValidationError("bad brain radius range");
        }
        if (lesion_radius_min > lesion_radius_max || lesion_contrast <= 1.0) {
            throw ValidationError("bad lesion config");
        }
        // boundary perturbation adds up to 25%; the lesion center is kept
        // within half the brain radius of the center, so the worst case is
        // 0.5 + 1.25 * lesion_radius_max of the brain radius
        if (0.5 + 1.25 * lesion_radius_max >= 1.0) {
            throw ValidationError("lesion cannot be guaranteed to fit inside brain");
        }
    }
};

namespace detail {

struct Bump {
    double cy, cx, sigma, amp;
};

}  // namespace detail

// Deterministic per rng state; masks are binary, background is exactly zero,
// and the lesion is strictly brighter than the in-brain median.
inline CaseRecord generate_phantom(const PhantomConfig& cfg, Pcg32& rng) {
    cfg.validate();
    int n = cfg.size;
    double cy = n / 2.0 + rng.uniform(-0.03, 0.03) * n;
    double cx = n / 2.0 + rng.uniform(-0.03, 0.03) * n;
    double ra = rng.uniform(cfg.brain_radius_min, cfg.brain_radius_max) * n;  // semi-axes
    double rb = rng.uniform(cfg.brain_radius_min, cfg.brain_radius_max) * n;
    double phi = rng.uniform(0.0, 3.14159265358979323846);
    double brain_r = 0.5 * (ra + rb);

    int n_bumps = 3 + static_cast<int>(rng.next_below(6));  // 3..8
    std::vector<detail::Bump> bumps(n_bumps);
    for (auto& b : bumps) {
        double br = rng.uniform(0.0, 0.7) * brain_r;
        double bth = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        b.cy = cy + br * std::sin(bth);
        b.cx = cx + br * std::cos(bth);
        b.sigma = std::max(1.5, cfg.texture_scale * brain_r * rng.uniform(0.5, 1.5));
        b.amp = rng.uniform(-0.15, 0.15);
    }

    // lesion: perturbed ellipse well inside the brain
    double les_r = rng.uniform(cfg.lesion_radius_min, cfg.lesion_radius_max) * brain_r;
    double off_r = rng.uniform(0.0, 0.5 * brain_r - 1.25 * les_r > 0 ? 0.5 * brain_r - 1.25 * les_r : 0.0);
    double off_th = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    double lcy = cy + off_r * std::sin(off_th);
    double lcx = cx + off_r * std::cos(off_th);
    double les_ecc = rng.uniform(0.7, 1.0);      // minor/major axis ratio
    double les_phi = rng.uniform(0.0, 3.14159265358979323846);
    int lobes = 3 + static_cast<int>(rng.next_below(4));  // 3..6
    double wobble = rng.uniform(0.05, 0.25);
    double wobble_phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846);

    CaseRecord rec;
    rec.image = Image2D(n, n, 0.0f);
    rec.brain_mask = MaskGrid(n, n, 0);
    rec.lesion_mask = MaskGrid(n, n, 0);

    double cphi = std::cos(phi), sphi = std::sin(phi);
    double clphi = std::cos(les_phi), slphi = std::sin(les_phi);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            double dy = r - cy, dx = c - cx;
            double u = (dx * cphi + dy * sphi) / ra;
            double v = (-dx * sphi + dy * cphi) / rb;
            if (u * u + v * v > 1.0) continue;
            rec.brain_mask.at(r, c) = 1;

            double val = 0.55;
            for (const auto& b : bumps) {
                double by = r - b.cy, bx = c - b.cx;
                val += b.amp * std::exp(-(bx * bx + by * by) / (2.0 * b.sigma * b.sigma));
            }
            val = std::clamp(val, 0.35, 0.9);

            double ly = r - lcy, lx = c - lcx;
            double lu = lx * clphi + ly * slphi;
            double lv = -lx * slphi + ly * clphi;
            double rad = std::sqrt(lu * lu + (lv / les_ecc) * (lv / les_ecc));
            double th = std::atan2(lv, lu);
            double boundary = les_r * (1.0 + wobble * std::sin(lobes * th + wobble_phase));
            if (rad <= boundary) {
                rec.lesion_mask.at(r, c) = 1;
                // floor at the nominal base level so the lesion stays strictly
                // brighter than the in-brain median at the default contrast
                val = cfg.lesion_contrast * std::max(val, 0.55);
            }
            rec.image.at(r, c) = static_cast<float>(val);
        }
    }
    validate_case(rec);
    return rec;
}

// n phantoms with per-case derived rng streams; case ids phantom_0000, ...
inline std::vector<CaseRecord> generate_cohort(int n, const PhantomConfig& cfg, std::uint64_t seed) {
    if (n < 1) throw ValidationError("cohort size must be >= 1");
    std::vector<CaseRecord> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        Pcg32 rng = Pcg32::derive(seed, static_cast<std::uint64_t>(i));
        CaseRecord rec = generate_phantom(cfg, rng);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "phantom_%04d", i);
        rec.case_id = buf;
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace mrseg
