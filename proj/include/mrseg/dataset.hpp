// Category assignment, train/val/test splitting, normalization, padding,
// and the paired image/mask augmentation menu.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "mrseg/errors.hpp"
#include "mrseg/rng.hpp"
#include "mrseg/tensor.hpp"

namespace mrseg {

// Full-cohort category sizes: minimal/mild/moderate 64 each, severe 67.
inline constexpr std::array<int, 4> kFullCategorySizes = {64, 64, 64, 67};

// Per-category train/val/test counts. Full-scale defaults: 38/6/20 for the
// first three categories, 40/6/21 for severe.
struct SplitSpec {
    int train = 0;
    int val = 0;
    int test = 0;

    int total() const { return train + val + test; }

    static SplitSpec full_default(Severity cat) {
        return cat == Severity::Severe ? SplitSpec{40, 6, 21} : SplitSpec{38, 6, 20};
    }
};

// Scales the full-cohort category sizes down to `total` cases by largest
// remainder; ties go to the earlier category.
inline std::array<int, 4> scale_category_sizes(int total) {
    constexpr int full = 64 + 64 + 64 + 67;
    std::array<int, 4> out{};
    std::array<double, 4> rem{};
    int assigned = 0;
    for (int i = 0; i < 4; ++i) {
        double quota = static_cast<double>(total) * kFullCategorySizes[i] / full;
        out[i] = static_cast<int>(std::floor(quota));
        rem[i] = quota - out[i];
        assigned += out[i];
    }
    std::array<int, 4> order = {0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (int k = 0; k < total - assigned; ++k) out[order[k]] += 1;
    return out;
}

// Scales a category's full split down to `total` cases, largest remainder,
// then guarantees at least one val and one test case (taken from train) so
// desk-scale cohorts remain trainable.
inline SplitSpec scale_split(Severity cat, int total) {
    SplitSpec full = SplitSpec::full_default(cat);
    if (total == full.total()) return full;
    std::array<int, 3> counts{};
    std::array<double, 3> rem{};
    std::array<int, 3> fulls = {full.train, full.val, full.test};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        double quota = static_cast<double>(total) * fulls[i] / full.total();
        counts[i] = static_cast<int>(std::floor(quota));
        rem[i] = quota - counts[i];
        assigned += counts[i];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (int k = 0; k < total - assigned; ++k) counts[order[k]] += 1;
    if (total >= 3) {
        for (int i = 1; i < 3; ++i) {
            if (counts[i] == 0 && counts[0] > 1) {
                counts[i] = 1;
                counts[0] -= 1;
            }
        }
    }
    return {counts[0], counts[1], counts[2]};
}

// Randomly partitions the cohort into the four categories with exact counts.
inline void assign_categories(std::vector<CaseRecord>& cases, const std::array<int, 4>& sizes, Pcg32& rng) {
    int total = sizes[0] + sizes[1] + sizes[2] + sizes[3];
    if (static_cast<int>(cases.size()) != total) {
        throw ValidationError("assign_categories: case count " + std::to_string(cases.size()) +
                              " != category total " + std::to_string(total));
    }
    std::vector<int> idx(cases.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx.data(), idx.size());
    int pos = 0;
    for (int cat = 0; cat < 4; ++cat) {
        for (int k = 0; k < sizes[cat]; ++k) {
            cases[idx[pos++]].severity = static_cast<Severity>(cat);
        }
    }
}

// Randomly splits one category's cases into train/val/test with exact counts.
inline void assign_splits(std::vector<CaseRecord*>& category_cases, const SplitSpec& spec, Pcg32& rng) {
    if (static_cast<int>(category_cases.size()) != spec.total()) {
        throw ValidationError("assign_splits: got " + std::to_string(category_cases.size()) +
                              " cases, spec wants " + std::to_string(spec.total()));
    }
    std::vector<int> idx(category_cases.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx.data(), idx.size());
    int pos = 0;
    for (int k = 0; k < spec.train; ++k) category_cases[idx[pos++]]->split = Split::Train;
    for (int k = 0; k < spec.val; ++k) category_cases[idx[pos++]]->split = Split::Val;
    for (int k = 0; k < spec.test; ++k) category_cases[idx[pos++]]->split = Split::Test;
}

// Zero-mean unit-std (population) over the brain region; the same affine map
// is applied to out-of-brain pixels. Near-constant regions divide by 1.
inline Image2D normalize_in_brain(const Image2D& image, const MaskGrid& brain_mask) {
    if (image.height != brain_mask.height || image.width != brain_mask.width) {
        throw ShapeError("normalize_in_brain: shape mismatch");
    }
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        if (brain_mask.data[i]) {
            sum += image.data[i];
            sum2 += static_cast<double>(image.data[i]) * image.data[i];
            ++n;
        }
    }
    if (n == 0) throw ValidationError("normalize_in_brain: empty brain mask");
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    double std_dev = var > 0 ? std::sqrt(var) : 0.0;
    if (std_dev < 1e-8) std_dev = 1.0;
    Image2D out(image.height, image.width);
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        out.data[i] = static_cast<float>((image.data[i] - mean) / std_dev);
    }
    return out;
}

namespace detail {

inline std::pair<int, int> pad_offsets(int in, int target) {
    int pad = target - in;
    return {pad / 2, pad - pad / 2};  // extra row/col goes to bottom/right
}

}  // namespace detail

// Centered zero-padding; odd remainders put the extra row/column at the
// bottom/right.
inline Image2D pad_to(const Image2D& image, int target) {
    if (image.height > target || image.width > target) throw ValidationError("pad_to: input exceeds target");
    auto [top, _b] = detail::pad_offsets(image.height, target);
    auto [left, _r] = detail::pad_offsets(image.width, target);
    Image2D out(target, target, 0.0f);
    for (int r = 0; r < image.height; ++r) {
        for (int c = 0; c < image.width; ++c) out.at(r + top, c + left) = image.at(r, c);
    }
    return out;
}

inline MaskGrid pad_to(const MaskGrid& mask, int target) {
    if (mask.height > target || mask.width > target) throw ValidationError("pad_to: input exceeds target");
    auto [top, _b] = detail::pad_offsets(mask.height, target);
    auto [left, _r] = detail::pad_offsets(mask.width, target);
    MaskGrid out(target, target, 0);
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) out.at(r + top, c + left) = mask.at(r, c);
    }
    return out;
}

enum class AugmentKind {
    FlipH,
    FlipV,
    Gamma,
    GaussianNoise,
    GaussianBlur,
    MedianBlur,
    BilateralBlur,
    Crop,
    Affine,
};

inline constexpr std::array<AugmentKind, 9> kAllAugmentKinds = {
    AugmentKind::FlipH,        AugmentKind::FlipV,      AugmentKind::Gamma,
    AugmentKind::GaussianNoise, AugmentKind::GaussianBlur, AugmentKind::MedianBlur,
    AugmentKind::BilateralBlur, AugmentKind::Crop,       AugmentKind::Affine,
};

namespace detail {

inline std::pair<float, float> intensity_range(const Image2D& img) {
    float lo = img.data[0], hi = img.data[0];
    for (float v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

inline float bilinear_sample(const Image2D& img, double sy, double sx) {
    int x0 = static_cast<int>(std::floor(sx));
    int y0 = static_cast<int>(std::floor(sy));
    double fx = sx - x0, fy = sy - y0;
    double acc = 0.0;
    for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
            int yy = y0 + dy, xx = x0 + dx;
            if (yy < 0 || yy >= img.height || xx < 0 || xx >= img.width) continue;
            acc += (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy) * img.at(yy, xx);
        }
    }
    return static_cast<float>(acc);
}

inline std::uint8_t nearest_sample(const MaskGrid& m, double sy, double sx) {
    int y = static_cast<int>(std::lround(sy));
    int x = static_cast<int>(std::lround(sx));
    if (y < 0 || y >= m.height || x < 0 || x >= m.width) return 0;
    return m.at(y, x);
}

// 2x3 inverse affine: dest (r,c) samples source at (a*c + b*r + tx, d*c + e*r + ty)
// expressed around the image center.
struct InverseAffine {
    double m00, m01, m10, m11;  // applied to centered (x, y)
};

template <typename ImgFn, typename MaskFn>
inline void warp_pair(const Image2D& img, const MaskGrid& mask, Image2D& oimg, MaskGrid& omask,
                      const InverseAffine& inv, ImgFn img_sample, MaskFn mask_sample) {
    double cy = (img.height - 1) / 2.0, cx = (img.width - 1) / 2.0;
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double x = c - cx, y = r - cy;
            double sx = cx + inv.m00 * x + inv.m01 * y;
            double sy = cy + inv.m10 * x + inv.m11 * y;
            oimg.at(r, c) = img_sample(img, sy, sx);
            omask.at(r, c) = mask_sample(mask, sy, sx);
        }
    }
}

inline void separable_gaussian(Image2D& img, int k) {
    double sigma = 0.3 * ((k - 1) * 0.5 - 1) + 0.8;  // OpenCV's default kernel sigma
    int half = k / 2;
    std::vector<double> kern(k);
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
        double x = i - half;
        kern[i] = std::exp(-x * x / (2 * sigma * sigma));
        s += kern[i];
    }
    for (auto& v : kern) v /= s;
    Image2D tmp(img.height, img.width);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i) {
                int cc = std::clamp(c + i, 0, img.width - 1);
                acc += kern[i + half] * img.at(r, cc);
            }
            tmp.at(r, c) = static_cast<float>(acc);
        }
    }
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i) {
                int rr = std::clamp(r + i, 0, img.height - 1);
                acc += kern[i + half] * tmp.at(rr, c);
            }
            img.at(r, c) = static_cast<float>(acc);
        }
    }
}

}  // namespace detail

// Applies one augmentation to an image/mask pair. Geometric kinds transform
// both grids (mask resampled nearest-neighbor); photometric kinds leave the
// mask untouched. Ranges: gamma [0.7, 1.5], noise sigma up to 10% of the
// intensity range, blur kernels {3,5}, crop keeps >= 90% of the area,
// affine +-10 deg / +-5% scale / +-5% shear.
inline void augment(Image2D& image, MaskGrid& mask, AugmentKind kind, Pcg32& rng) {
    if (image.height != mask.height || image.width != mask.width) {
        throw ShapeError("augment: image/mask shape mismatch");
    }
    int h = image.height, w = image.width;
    switch (kind) {
        case AugmentKind::FlipH: {
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w / 2; ++c) {
                    std::swap(image.at(r, c), image.at(r, w - 1 - c));
                    std::swap(mask.at(r, c), mask.at(r, w - 1 - c));
                }
            }
            break;
        }
        case AugmentKind::FlipV: {
            for (int r = 0; r < h / 2; ++r) {
                for (int c = 0; c < w; ++c) {
                    std::swap(image.at(r, c), image.at(h - 1 - r, c));
                    std::swap(mask.at(r, c), mask.at(h - 1 - r, c));
                }
            }
            break;
        }
        case AugmentKind::Gamma: {
            double gamma = rng.uniform(0.7, 1.5);
            auto [lo, hi] = detail::intensity_range(image);
            double range = hi - lo;
            if (range < 1e-12) break;
            for (auto& v : image.data) {
                double t = (v - lo) / range;
                v = static_cast<float>(lo + range * std::pow(t, gamma));
            }
            break;
        }
        case AugmentKind::GaussianNoise: {
            auto [lo, hi] = detail::intensity_range(image);
            double sigma = rng.uniform(0.0, 0.1) * std::max(1e-12f, hi - lo);
            for (auto& v : image.data) v = static_cast<float>(v + rng.normal(0.0, sigma));
            break;
        }
        case AugmentKind::GaussianBlur: {
            int k = rng.next_below(2) ? 5 : 3;
            detail::separable_gaussian(image, k);
            break;
        }
        case AugmentKind::MedianBlur: {
            int k = rng.next_below(2) ? 5 : 3;
            int half = k / 2;
            Image2D out(h, w);
            std::vector<float> window;
            window.reserve(static_cast<std::size_t>(k) * k);
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    window.clear();
                    for (int dr = -half; dr <= half; ++dr) {
                        for (int dc = -half; dc <= half; ++dc) {
                            window.push_back(image.at(std::clamp(r + dr, 0, h - 1), std::clamp(c + dc, 0, w - 1)));
                        }
                    }
                    std::nth_element(window.begin(), window.begin() + window.size() / 2, window.end());
                    out.at(r, c) = window[window.size() / 2];
                }
            }
            image = std::move(out);
            break;
        }
        case AugmentKind::BilateralBlur: {
            int k = rng.next_below(2) ? 5 : 3;
            int half = k / 2;
            auto [lo, hi] = detail::intensity_range(image);
            double sigma_r = 0.1 * std::max(1e-12f, hi - lo);
            double sigma_s = 0.5 * k;
            Image2D out(h, w);
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    double center = image.at(r, c);
                    double acc = 0.0, wsum = 0.0;
                    for (int dr = -half; dr <= half; ++dr) {
                        for (int dc = -half; dc <= half; ++dc) {
                            double v = image.at(std::clamp(r + dr, 0, h - 1), std::clamp(c + dc, 0, w - 1));
                            double ws = std::exp(-(dr * dr + dc * dc) / (2 * sigma_s * sigma_s));
                            double wr = std::exp(-(v - center) * (v - center) / (2 * sigma_r * sigma_r));
                            acc += ws * wr * v;
                            wsum += ws * wr;
                        }
                    }
                    out.at(r, c) = static_cast<float>(acc / wsum);
                }
            }
            image = std::move(out);
            break;
        }
        case AugmentKind::Crop: {
            // window area >= 90%: the resize-back scales mask areas by up to
            // 1/area, and small lesions also pay a discretization penalty, so
            // an 80% floor would break the 25% area-preservation bound
            double area = rng.uniform(0.9, 1.0);
            double side = std::sqrt(area);
            int ch = std::max(1, static_cast<int>(std::lround(side * h)));
            int cw = std::max(1, static_cast<int>(std::lround(side * w)));
            int top = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(h - ch + 1)));
            int left = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(w - cw + 1)));
            Image2D oimg(h, w);
            MaskGrid omask(h, w);
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    // map back into the crop window, then resize to full size
                    double sy = top + (static_cast<double>(r) / (h - 1)) * (ch - 1);
                    double sx = left + (static_cast<double>(c) / (w - 1)) * (cw - 1);
                    oimg.at(r, c) = detail::bilinear_sample(image, sy, sx);
                    omask.at(r, c) = detail::nearest_sample(mask, sy, sx);
                }
            }
            image = std::move(oimg);
            mask = std::move(omask);
            break;
        }
        case AugmentKind::Affine: {
            double theta = rng.uniform(-10.0, 10.0) * 3.14159265358979323846 / 180.0;
            double scale = 1.0 + rng.uniform(-0.05, 0.05);
            double shear = rng.uniform(-0.05, 0.05);
            // forward = R(theta) * S(scale) * Shear(x, shear); inverse applied at sample time
            double f00 = scale * std::cos(theta), f01 = scale * (shear * std::cos(theta) - std::sin(theta));
            double f10 = scale * std::sin(theta), f11 = scale * (shear * std::sin(theta) + std::cos(theta));
            double det = f00 * f11 - f01 * f10;
            detail::InverseAffine inv{f11 / det, -f01 / det, -f10 / det, f00 / det};
            Image2D oimg(h, w);
            MaskGrid omask(h, w);
            detail::warp_pair(image, mask, oimg, omask, inv, detail::bilinear_sample, detail::nearest_sample);
            image = std::move(oimg);
            mask = std::move(omask);
            break;
        }
    }
}

}  // namespace mrseg
