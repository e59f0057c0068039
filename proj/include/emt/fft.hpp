#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace emt::dsp {

// Radix-2 FFT plan with precomputed twiddles and bit-reversal permutation.
// Plans are immutable after construction and safe to share across threads;
// callers provide their own scratch buffers.
class FftPlan {
public:
    explicit FftPlan(size_t n);

    size_t size() const { return n_; }

    // In-place forward complex FFT. buf.size() must equal size().
    void forward(std::complex<float>* buf) const;

    // Power spectrum of a real signal zero-padded to the FFT size.
    // out has size()/2 + 1 entries (DC .. Nyquist), |X[k]|^2.
    // Computed via a packed half-size complex transform (two real samples per
    // complex slot), roughly halving the cost versus a full complex FFT.
    void real_power_spectrum(const float* signal, size_t signal_len, float* out,
                             std::complex<float>* scratch) const;

private:
    size_t n_;
    std::vector<size_t> bitrev_;
    std::vector<std::complex<float>> twiddles_;
    std::unique_ptr<FftPlan> half_;  // size n/2 plan for the real path
};

std::vector<float> hann_window(size_t n);

}  // namespace emt::dsp
