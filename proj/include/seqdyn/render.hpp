#pragma once

#include <zlib.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/polyseq.hpp"
#include "seqdyn/rays.hpp"
#include "seqdyn/util.hpp"

namespace seqdyn::render {

using polyseq::SequenceSpec;

struct Viewport {
    cplx center;
    double width = 4.0;
    int px_w = 512;
    int px_h = 512;

    void validate() const {
        if (!(width > 0.0) || px_w < 1 || px_h < 1)
            throw ConfigError("Viewport: need width > 0 and pixels >= 1");
    }
    double height() const { return width * px_h / px_w; } // square pixel cells
    cplx pixel_center(int ix, int iy) const {
        const double re = center.real() + ((ix + 0.5) / px_w - 0.5) * width;
        const double im = center.imag() + (0.5 - (iy + 0.5) / px_h) * height();
        return {re, im};
    }
    bool to_pixel(cplx z, int* ix, int* iy) const {
        const double fx = (z.real() - center.real()) / width + 0.5;
        const double fy = 0.5 - (z.imag() - center.imag()) / height();
        *ix = static_cast<int>(std::floor(fx * px_w));
        *iy = static_cast<int>(std::floor(fy * px_h));
        return *ix >= 0 && *ix < px_w && *iy >= 0 && *iy < px_h;
    }
};

struct Pixel {
    float smooth = 0.0f; // Green value when escaped
    std::int32_t n = -1; // escape step, -1 while bounded at the horizon
    std::uint8_t flags = 0;

    static constexpr std::uint8_t kEscaped = 1;
    static constexpr std::uint8_t kRay = 2;
    static constexpr std::uint8_t kMarker = 4;
    bool escaped() const { return flags & kEscaped; }
};

struct RasterMeta {
    std::string spec_digest;
    int m = 0;
    int horizon = 0;
    Viewport viewport;
    std::string note;
};

struct Raster {
    int w = 0, h = 0;
    std::vector<Pixel> pixels; // row-major
    RasterMeta meta;

    Pixel& at(int ix, int iy) { return pixels[static_cast<std::size_t>(iy) * w + ix]; }
    const Pixel& at(int ix, int iy) const {
        return pixels[static_cast<std::size_t>(iy) * w + ix];
    }
    double bounded_fraction() const {
        std::size_t b = 0;
        for (const auto& p : pixels)
            if (!p.escaped()) ++b;
        return static_cast<double>(b) / pixels.size();
    }
};

namespace detail {

// Green value by the incremental correction, without the monic gate: for a
// non-monic bounded sequence the same telescoping converges, with the lead
// moduli folded into the corrections.
inline double smooth_green(const SequenceSpec& spec, int m, cplx z, double R0,
                           int horizon) {
    cplx w = z;
    int n = m;
    while (std::abs(w) <= R0 && n - m < horizon) w = spec.polynomial_at(++n).eval(w);
    double invD = 1.0;
    double t = std::log(std::abs(w));
    double headD = 1.0;
    for (int k = m + 1; k <= n; ++k) headD *= spec.polynomial_at(k).degree();
    for (int k = n + 1; k <= m + horizon; ++k) {
        const auto p = spec.polynomial_at(k);
        const double prev = std::log(std::abs(w));
        w = p.eval(w);
        invD /= p.degree();
        const double inc = invD * (std::log(std::abs(w)) - p.degree() * prev);
        t += inc;
        if (std::abs(w) > polyseq::kOverflowCap || std::abs(inc) < 1e-12) break;
    }
    return t / headD;
}

} // namespace detail

/// Escape-time classification with smooth potential shading. Bounded means
/// "not escaped within the horizon". Deterministic: identical inputs give
/// byte-identical rasters regardless of thread count.
inline Raster render_escape(const SequenceSpec& spec, int m, const Viewport& vp,
                            int horizon = 512, double R0 = 0.0, unsigned threads = 0) {
    vp.validate();
    if (R0 <= 0.0) R0 = polyseq::escape_radius(spec.bounds());
    Raster r;
    r.w = vp.px_w;
    r.h = vp.px_h;
    r.pixels.assign(static_cast<std::size_t>(vp.px_w) * vp.px_h, Pixel{});
    r.meta.m = m;
    r.meta.horizon = horizon;
    r.meta.viewport = vp;
    const double R0c = R0;
    parallel_for(static_cast<std::size_t>(vp.px_h), [&](std::size_t iy) {
        for (int ix = 0; ix < vp.px_w; ++ix) {
            const cplx z = vp.pixel_center(ix, static_cast<int>(iy));
            Pixel& px = r.at(ix, static_cast<int>(iy));
            const auto esc = polyseq::escape_time(spec, m, z, R0c, horizon);
            if (esc) {
                px.flags |= Pixel::kEscaped;
                px.n = *esc;
                px.smooth = static_cast<float>(detail::smooth_green(spec, m, z, R0c, horizon));
            }
        }
    }, threads);
    return r;
}

/// Draw traced rays into the overlay channel; landing markers for landed
/// traces. Traces for a different time index raise TimeMismatch; traces
/// entirely outside the viewport leave the pixels unchanged (noted in the
/// metadata).
inline Raster overlay_rays(Raster raster, const std::vector<rays::RayTrace>& traces) {
    const Viewport& vp = raster.meta.viewport;
    for (const auto& tr : traces) {
        if (tr.m != raster.meta.m)
            throw TimeMismatch("overlay_rays: trace at time " + std::to_string(tr.m) +
                               " onto raster at time " + std::to_string(raster.meta.m));
        bool touched = false;
        for (std::size_t i = 0; i + 1 < tr.points.size(); ++i) {
            const cplx a = tr.points[i].z, b = tr.points[i + 1].z;
            const int steps =
                std::max(2, static_cast<int>(std::abs(b - a) / vp.width * vp.px_w * 2));
            for (int s = 0; s <= steps; ++s) {
                const cplx p = a + (b - a) * (static_cast<double>(s) / steps);
                int ix, iy;
                if (vp.to_pixel(p, &ix, &iy)) {
                    raster.at(ix, iy).flags |= Pixel::kRay;
                    touched = true;
                }
            }
        }
        if (tr.landing) {
            int ix, iy;
            if (vp.to_pixel(*tr.landing, &ix, &iy)) {
                for (int dy = -2; dy <= 2; ++dy)
                    for (int dx = -2; dx <= 2; ++dx)
                        if ((dx == 0 || dy == 0) && ix + dx >= 0 && ix + dx < vp.px_w &&
                            iy + dy >= 0 && iy + dy < vp.px_h)
                            raster.at(ix + dx, iy + dy).flags |= Pixel::kMarker;
                touched = true;
            }
        }
        if (!touched)
            raster.meta.note += "trace " + tr.theta.str() + " outside viewport; ";
    }
    return raster;
}

inline void color_pixel(const Pixel& px, std::uint8_t* rgb) {
    if (px.flags & Pixel::kMarker) {
        rgb[0] = 255; rgb[1] = 255; rgb[2] = 255;
        return;
    }
    if (px.flags & Pixel::kRay) {
        rgb[0] = 255; rgb[1] = 64; rgb[2] = 32;
        return;
    }
    if (!px.escaped()) {
        rgb[0] = 12; rgb[1] = 12; rgb[2] = 28;
        return;
    }
    // banded palette on the log of the potential
    const double g = std::max(1e-18, static_cast<double>(px.smooth));
    const double t = std::log(g);
    auto chan = [&](double phase) {
        return static_cast<std::uint8_t>(
            std::lround(255.0 * (0.55 + 0.45 * std::cos(0.85 * t + phase))));
    };
    rgb[0] = chan(0.0);
    rgb[1] = chan(0.9);
    rgb[2] = chan(1.8);
}

inline std::vector<std::uint8_t> to_rgb(const Raster& r) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(r.w) * r.h * 3);
    for (std::size_t i = 0; i < r.pixels.size(); ++i)
        color_pixel(r.pixels[i], &out[i * 3]);
    return out;
}

inline void write_ppm(const std::string& path, const Raster& r) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("write_ppm: cannot open " + path);
    f << "P6\n" << r.w << " " << r.h << "\n255\n";
    const auto rgb = to_rgb(r);
    f.write(reinterpret_cast<const char*>(rgb.data()),
            static_cast<std::streamsize>(rgb.size()));
}

namespace detail {

inline void png_chunk(std::vector<std::uint8_t>& out, const char type[4],
                      const std::uint8_t* data, std::size_t len) {
    auto put32 = [&](std::uint32_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 24));
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    };
    put32(static_cast<std::uint32_t>(len));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    if (len) out.insert(out.end(), data, data + len);
    const auto crc = crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
    put32(static_cast<std::uint32_t>(crc));
}

} // namespace detail

/// 8-bit RGB PNG via zlib, filter 0 scanlines.
inline void write_png(const std::string& path, const Raster& r) {
    const auto rgb = to_rgb(r);
    std::vector<std::uint8_t> raw;
    raw.reserve(rgb.size() + r.h);
    for (int y = 0; y < r.h; ++y) {
        raw.push_back(0);
        const std::size_t row = static_cast<std::size_t>(y) * r.w * 3;
        raw.insert(raw.end(), rgb.begin() + row, rgb.begin() + row + r.w * 3);
    }
    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 9) !=
        Z_OK)
        throw ConfigError("write_png: deflate failed");
    comp.resize(comp_len);

    std::vector<std::uint8_t> out{137, 80, 78, 71, 13, 10, 26, 10};
    std::uint8_t ihdr[13];
    auto be32 = [](std::uint8_t* p, std::uint32_t v) {
        p[0] = static_cast<std::uint8_t>(v >> 24);
        p[1] = static_cast<std::uint8_t>(v >> 16);
        p[2] = static_cast<std::uint8_t>(v >> 8);
        p[3] = static_cast<std::uint8_t>(v);
    };
    be32(ihdr, static_cast<std::uint32_t>(r.w));
    be32(ihdr + 4, static_cast<std::uint32_t>(r.h));
    ihdr[8] = 8;  // bit depth
    ihdr[9] = 2;  // truecolor
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    detail::png_chunk(out, "IHDR", ihdr, sizeof ihdr);
    detail::png_chunk(out, "IDAT", comp.data(), comp.size());
    detail::png_chunk(out, "IEND", nullptr, 0);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("write_png: cannot open " + path);
    f.write(reinterpret_cast<const char*>(out.data()),
            static_cast<std::streamsize>(out.size()));
}

} // namespace seqdyn::render
