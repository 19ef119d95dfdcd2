#pragma once

#include <complex>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace flipchain {

namespace detail {
inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

/// Thin RAII wrapper around FFTW complex transforms of a fixed length.
/// Plans are created with FFTW_UNALIGNED so they can be executed on any
/// caller buffer. Plan creation is serialized (FFTW requirement); execution
/// is safe from multiple threads on distinct buffers.
class Fft {
public:
    explicit Fft(int n) : n_(n) {
        if (n < 1) throw std::invalid_argument("Fft: length must be positive");
        std::vector<std::complex<double>> probe(static_cast<std::size_t>(n));
        auto* p = reinterpret_cast<fftw_complex*>(probe.data());
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fwd_ = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd_ = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!fwd_ || !bwd_) throw std::runtime_error("Fft: plan creation failed");
    }

    ~Fft() {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        if (fwd_) fftw_destroy_plan(fwd_);
        if (bwd_) fftw_destroy_plan(bwd_);
    }

    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    int size() const { return n_; }

    void forward(std::complex<double>* data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(fwd_, p, p);
    }

    /// Unnormalized inverse; apply 1/n if a round trip must be the identity.
    void backward(std::complex<double>* data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(bwd_, p, p);
    }

private:
    int n_;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

} // namespace flipchain
