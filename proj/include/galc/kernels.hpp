#pragma once

// Raw row-major kernels shared by the differentiable ops. Every product is
// accumulated into a double buffer, whatever the storage type.

#include <cstddef>
#include <span>
#include <vector>

namespace galc::kernels {

/// C[M×N] += A[M×K] · B[K×N]
template <class T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const T* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const T* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * static_cast<double>(brow[j]);
        }
    }
}

/// C[M×N] += A[K×M]ᵀ · B[K×N]
template <class T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, double* c) {
    for (std::size_t p = 0; p < k; ++p) {
        const T* arow = a + p * m;
        const T* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * static_cast<double>(brow[j]);
        }
    }
}

/// C[M×N] += A[M×K] · B[N×K]ᵀ
template <class T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, double* c) {
    std::vector<T> bt(k * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
    gemm_nn(m, n, k, a, bt.data(), c);
}

struct ConvGeometry {
    std::size_t channels = 0, height = 0, width = 0;
    std::size_t kh = 0, kw = 0, stride = 1, pad = 0;
    std::size_t out_h = 0, out_w = 0;

    std::size_t patch() const { return channels * kh * kw; }
    std::size_t positions() const { return out_h * out_w; }
};

/// Unfold one C×H×W image into a [C·kh·kw × out_h·out_w] column matrix.
template <class T>
void im2col(const T* img, const ConvGeometry& g, T* cols) {
    const std::size_t p = g.positions();
    for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t ki = 0; ki < g.kh; ++ki)
            for (std::size_t kj = 0; kj < g.kw; ++kj) {
                T* row = cols + ((c * g.kh + ki) * g.kw + kj) * p;
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                                   static_cast<std::ptrdiff_t>(g.pad);
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                                       static_cast<std::ptrdiff_t>(g.pad);
                        const bool inside = y >= 0 && x >= 0 && y < static_cast<std::ptrdiff_t>(g.height) &&
                                            x < static_cast<std::ptrdiff_t>(g.width);
                        row[oy * g.out_w + ox] =
                            inside ? img[(c * g.height + static_cast<std::size_t>(y)) * g.width +
                                         static_cast<std::size_t>(x)]
                                   : T{0};
                    }
                }
            }
}

/// Adjoint of im2col: scatter-add columns back into a C×H×W image.
inline void col2im(const double* cols, const ConvGeometry& g, double* img) {
    const std::size_t p = g.positions();
    for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t ki = 0; ki < g.kh; ++ki)
            for (std::size_t kj = 0; kj < g.kw; ++kj) {
                const double* row = cols + ((c * g.kh + ki) * g.kw + kj) * p;
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                                   static_cast<std::ptrdiff_t>(g.pad);
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.height)) continue;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                                       static_cast<std::ptrdiff_t>(g.pad);
                        if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.width)) continue;
                        img[(c * g.height + static_cast<std::size_t>(y)) * g.width + static_cast<std::size_t>(x)] +=
                            row[oy * g.out_w + ox];
                    }
                }
            }
}

template <class T>
void store(std::span<const double> src, std::span<T> dst) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(src[i]);
}

}  // namespace galc::kernels
