// 2D discrete Fourier transforms and the rigid-motion operators used for
// k-space artifact synthesis. Arbitrary grid sizes are supported (240 is not
// a power of two): power-of-two lengths run radix-2, everything else goes
// through Bluestein's chirp-z reduction onto a padded radix-2 transform.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "mrseg/errors.hpp"
#include "mrseg/tensor.hpp"

namespace mrseg {

// Translation in pixels; positive dx moves content toward larger column
// indices, positive dy toward larger row indices.
struct Shift2D {
    double dx = 0.0;
    double dy = 0.0;
};

// Rotation about the image center, normalized to (-180, 180]. Positive angles
// rotate content counterclockwise in the usual x-right, y-up sense.
struct RotationAngle {
    double degrees = 0.0;

    static RotationAngle of(double deg) {
        double d = std::fmod(deg, 360.0);
        if (d > 180.0) d -= 360.0;
        if (d <= -180.0) d += 360.0;
        return RotationAngle{d};
    }
    double radians() const { return degrees * 3.14159265358979323846 / 180.0; }
};

namespace detail {

constexpr double kPi = 3.14159265358979323846;

using cvec = std::vector<std::complex<double>>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey; sign = -1 forward, +1 inverse
// (unnormalized).
inline void fft_pow2(cvec& a, int sign) {
    std::size_t n = a.size();
    if (n <= 1) return;
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * kPi / static_cast<double>(len);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Bluestein chirp-z: arbitrary-length DFT via convolution of length >= 2n-1.
inline void fft_bluestein(cvec& a, int sign) {
    std::size_t n = a.size();
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    // chirp[k] = exp(sign * i * pi * k^2 / n); k^2 mod 2n keeps the argument small.
    cvec chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t k2 = (k * k) % (2 * n);
        double ang = sign * kPi * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = {std::cos(ang), std::sin(ang)};
    }
    cvec x(m, {0.0, 0.0}), y(m, {0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
    y[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) y[k] = y[m - k] = std::conj(chirp[k]);
    fft_pow2(x, -1);
    fft_pow2(y, -1);
    for (std::size_t i = 0; i < m; ++i) x[i] *= y[i];
    fft_pow2(x, +1);
    double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k] * scale;
}

inline void fft_1d(cvec& a, int sign) {
    if (is_pow2(a.size())) fft_pow2(a, sign);
    else fft_bluestein(a, sign);
}

// Transforms every row, then every column (unnormalized).
inline void fft_2d_inplace(ComplexGrid& g, int sign) {
    int h = g.height, w = g.width;
    cvec line;
    for (int r = 0; r < h; ++r) {
        line.assign(g.data.begin() + static_cast<std::size_t>(r) * w, g.data.begin() + static_cast<std::size_t>(r + 1) * w);
        fft_1d(line, sign);
        std::copy(line.begin(), line.end(), g.data.begin() + static_cast<std::size_t>(r) * w);
    }
    line.resize(h);
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) line[r] = g.at(r, c);
        fft_1d(line, sign);
        for (int r = 0; r < h; ++r) g.at(r, c) = line[r];
    }
}

// Signed frequency index in the fftshift-consistent convention.
inline int signed_freq(int k, int n) { return (k <= (n - 1) / 2) ? k : k - n; }

}  // namespace detail

// Unnormalized forward 2D DFT; ifft2d carries the 1/(H*W) factor.
inline ComplexGrid fft2d(const Image2D& image) {
    if (image.height < 1 || image.width < 1) throw ShapeError("fft2d: empty image");
    ComplexGrid g(image.height, image.width);
    for (std::size_t i = 0; i < image.data.size(); ++i) g.data[i] = {static_cast<double>(image.data[i]), 0.0};
    detail::fft_2d_inplace(g, -1);
    return g;
}

// Real part of the normalized inverse DFT. The discarded imaginary residue's
// max magnitude is reported through *imag_residue when non-null.
inline Image2D ifft2d(const ComplexGrid& kspace, double* imag_residue = nullptr) {
    ComplexGrid g = kspace;
    detail::fft_2d_inplace(g, +1);
    double norm = 1.0 / (static_cast<double>(g.height) * g.width);
    Image2D out(g.height, g.width);
    double max_imag = 0.0;
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        std::complex<double> v = g.data[i] * norm;
        out.data[i] = static_cast<float>(v.real());
        max_imag = std::max(max_imag, std::abs(v.imag()));
    }
    if (imag_residue) *imag_residue = max_imag;
    return out;
}

// Fourier shift theorem: multiply element (ky, kx) by
// exp(-2*pi*i * (kx*dx/W + ky*dy/H)) with signed frequencies. Preserves
// per-element magnitude; equals a circular image shift for integer offsets.
inline ComplexGrid translate_kspace(const ComplexGrid& kspace, const Shift2D& shift) {
    ComplexGrid out(kspace.height, kspace.width);
    int h = kspace.height, w = kspace.width;
    for (int r = 0; r < h; ++r) {
        double fy = static_cast<double>(detail::signed_freq(r, h)) / h;
        for (int c = 0; c < w; ++c) {
            double fx = static_cast<double>(detail::signed_freq(c, w)) / w;
            double ang = -2.0 * detail::kPi * (fx * shift.dx + fy * shift.dy);
            out.at(r, c) = kspace.at(r, c) * std::complex<double>(std::cos(ang), std::sin(ang));
        }
    }
    return out;
}

// Rotates about the center ((H-1)/2, (W-1)/2) with bilinear interpolation;
// source samples outside the field of view read as zero. The post-motion
// k-space is fft2d(rotate_image(...)): rotating the object rotates its
// spectrum identically, so no non-Cartesian regridding is needed.
inline Image2D rotate_image(const Image2D& image, const RotationAngle& angle) {
    if (angle.degrees == 0.0) return image;
    int h = image.height, w = image.width;
    double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    double th = angle.radians();
    double cos_t = std::cos(th), sin_t = std::sin(th);
    Image2D out(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            // inverse map: rotate the destination offset by -theta
            double ry = r - cy, rx = c - cx;
            double sx = cx + cos_t * rx + sin_t * ry;
            double sy = cy - sin_t * rx + cos_t * ry;
            int x0 = static_cast<int>(std::floor(sx));
            int y0 = static_cast<int>(std::floor(sy));
            double fx = sx - x0, fy = sy - y0;
            double acc = 0.0;
            for (int dy = 0; dy <= 1; ++dy) {
                for (int dx = 0; dx <= 1; ++dx) {
                    int yy = y0 + dy, xx = x0 + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    double wgt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
                    acc += wgt * image.at(yy, xx);
                }
            }
            out.at(r, c) = static_cast<float>(acc);
        }
    }
    return out;
}

// Exact source position an impulse maps from under rotate_image's inverse
// map; exposed for coordinate-level verification.
inline std::pair<double, double> rotate_source_coord(int h, int w, int r, int c, const RotationAngle& angle) {
    double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    double th = angle.radians();
    double ry = r - cy, rx = c - cx;
    return {cy - std::sin(th) * rx + std::cos(th) * ry, cx + std::cos(th) * rx + std::sin(th) * ry};
}

// Cartesian line-by-line readout: phase-encode profiles are k-space rows
// acquired top to bottom. Rows [0, event) come from the pre-motion spectrum,
// rows [event, H) from the post-motion spectrum.
inline ComplexGrid splice_kspace(const ComplexGrid& pre, const ComplexGrid& post, int event_profile) {
    if (pre.height != post.height || pre.width != post.width) {
        throw ShapeError("splice_kspace: mismatched grid shapes");
    }
    if (event_profile < 0 || event_profile > pre.height) {
        throw ValidationError("splice_kspace: event profile out of range");
    }
    ComplexGrid out(pre.height, pre.width);
    for (int r = 0; r < pre.height; ++r) {
        const ComplexGrid& src = (r < event_profile) ? pre : post;
        for (int c = 0; c < pre.width; ++c) out.at(r, c) = src.at(r, c);
    }
    return out;
}

}  // namespace mrseg
