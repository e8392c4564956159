#ifndef EPS_FFT_HPP
#define EPS_FFT_HPP

#include <complex>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace eps {
namespace detail {

// FFTW plan creation is not thread-safe; execution with per-call buffers is.
// Plans are cached per (size, direction) and created under a global lock,
// using FFTW_ESTIMATE so results are deterministic across runs.
class FftPlanCache {
public:
    static FftPlanCache& instance() {
        static FftPlanCache cache;
        return cache;
    }

    fftw_plan get(int n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<fftw_complex> in(n), out(n);
        fftw_plan p = fftw_plan_dft_1d(n, in.data(), out.data(), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw std::runtime_error("fft: failed to create plan of size " + std::to_string(n));
        plans_.emplace(key, p);
        return p;
    }

private:
    FftPlanCache() = default;
    ~FftPlanCache() {
        for (auto& kv : plans_) fftw_destroy_plan(kv.second);
    }
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

} // namespace detail

/// Unnormalized forward DFT, any length >= 1.
inline std::vector<std::complex<double>> fft(const std::vector<std::complex<double>>& x) {
    if (x.empty()) throw std::invalid_argument("fft: empty input");
    const int n = static_cast<int>(x.size());
    fftw_plan plan = detail::FftPlanCache::instance().get(n, FFTW_FORWARD);
    std::vector<std::complex<double>> out(x.size());
    auto* in_ptr = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(x.data()));
    fftw_execute_dft(plan, in_ptr, reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

/// Inverse DFT with 1/N normalization (fft followed by ifft is identity).
inline std::vector<std::complex<double>> ifft(const std::vector<std::complex<double>>& x) {
    if (x.empty()) throw std::invalid_argument("ifft: empty input");
    const int n = static_cast<int>(x.size());
    fftw_plan plan = detail::FftPlanCache::instance().get(n, FFTW_BACKWARD);
    std::vector<std::complex<double>> out(x.size());
    auto* in_ptr = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(x.data()));
    fftw_execute_dft(plan, in_ptr, reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / n;
    for (auto& v : out) v *= scale;
    return out;
}

} // namespace eps

#endif
