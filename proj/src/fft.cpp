#include "emt/fft.hpp"

#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace emt::dsp {

FftPlan::FftPlan(size_t n) : n_(n) {
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("FFT size must be a power of two");
    bitrev_.resize(n);
    size_t log2n = 0;
    while ((size_t{1} << log2n) < n) ++log2n;
    for (size_t i = 0; i < n; ++i) {
        size_t r = 0;
        for (size_t b = 0; b < log2n; ++b)
            if (i & (size_t{1} << b)) r |= size_t{1} << (log2n - 1 - b);
        bitrev_[i] = r;
    }
    twiddles_.resize(n / 2);
    for (size_t k = 0; k < n / 2; ++k) {
        double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        twiddles_[k] = {static_cast<float>(std::cos(ang)), static_cast<float>(std::sin(ang))};
    }
    if (n >= 4) half_ = std::make_unique<FftPlan>(n / 2);
}

void FftPlan::forward(std::complex<float>* buf) const {
    for (size_t i = 0; i < n_; ++i) {
        size_t j = bitrev_[i];
        if (i < j) std::swap(buf[i], buf[j]);
    }
    // Butterflies on raw floats: std::complex operator* routes through
    // __mulsc3 for NaN handling, which dominates the transform cost.
    auto* f = reinterpret_cast<float*>(buf);
    const auto* tw = reinterpret_cast<const float*>(twiddles_.data());
    for (size_t len = 2; len <= n_; len <<= 1) {
        size_t half = len >> 1;
        size_t stride = n_ / len;
        for (size_t base = 0; base < n_; base += len) {
            for (size_t k = 0; k < half; ++k) {
                float wr = tw[2 * k * stride];
                float wi = tw[2 * k * stride + 1];
                size_t a = 2 * (base + k);
                size_t b = 2 * (base + k + half);
                float vr = f[b] * wr - f[b + 1] * wi;
                float vi = f[b] * wi + f[b + 1] * wr;
                float ur = f[a], ui = f[a + 1];
                f[a] = ur + vr;
                f[a + 1] = ui + vi;
                f[b] = ur - vr;
                f[b + 1] = ui - vi;
            }
        }
    }
}

void FftPlan::real_power_spectrum(const float* signal, size_t signal_len, float* out,
                                  std::complex<float>* scratch) const {
    assert(signal_len <= n_);
    if (!half_) {
        for (size_t i = 0; i < signal_len; ++i) scratch[i] = {signal[i], 0.0f};
        for (size_t i = signal_len; i < n_; ++i) scratch[i] = {0.0f, 0.0f};
        forward(scratch);
        size_t bins = n_ / 2 + 1;
        for (size_t k = 0; k < bins; ++k) out[k] = std::norm(scratch[k]);
        return;
    }

    // Pack consecutive real samples into one complex slot, run the half-size
    // transform, then untangle even/odd spectra:
    //   X[k] = E[k] + W_n^k * O[k],  E/O from Z[k] and conj(Z[m-k]).
    const size_t m = n_ / 2;
    for (size_t i = 0; i < m; ++i) {
        float re = 2 * i < signal_len ? signal[2 * i] : 0.0f;
        float im = 2 * i + 1 < signal_len ? signal[2 * i + 1] : 0.0f;
        scratch[i] = {re, im};
    }
    half_->forward(scratch);

    const auto* z = reinterpret_cast<const float*>(scratch);
    const auto* tw = reinterpret_cast<const float*>(twiddles_.data());
    for (size_t k = 0; k <= m; ++k) {
        size_t ka = k == m ? 0 : k;
        size_t kb = k == 0 ? 0 : m - k;
        float ar = z[2 * ka], ai = z[2 * ka + 1];
        float br = z[2 * kb], bi = z[2 * kb + 1];
        float er = 0.5f * (ar + br);
        float ei = 0.5f * (ai - bi);
        float or_ = 0.5f * (ai + bi);
        float oi = 0.5f * (br - ar);
        float wr = k == m ? -1.0f : tw[2 * k];
        float wi = k == m ? 0.0f : tw[2 * k + 1];
        float xr = er + wr * or_ - wi * oi;
        float xi = ei + wr * oi + wi * or_;
        out[k] = xr * xr + xi * xi;
    }
}

std::vector<float> hann_window(size_t n) {
    std::vector<float> w(n);
    for (size_t i = 0; i < n; ++i)
        w[i] = static_cast<float>(
            0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                 static_cast<double>(n - 1)));
    return w;
}

}  // namespace emt::dsp
