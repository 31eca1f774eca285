#include "riskplan/colored_noise.hpp"

#include <cmath>

#include <fftw3.h>

#include "riskplan/types.hpp"

namespace riskplan {

ColoredNoiseGenerator::ColoredNoiseGenerator(int horizon) : horizon_(horizon) {
    require(horizon >= 1, "colored noise needs horizon >= 1");
    if (horizon_ < 2) return;  // length-1 sequences bypass the FFT entirely
    time_buf_ = fftw_alloc_real(static_cast<std::size_t>(horizon_));
    freq_buf_ = fftw_alloc_complex(static_cast<std::size_t>(horizon_ / 2 + 1));
    // FFTW_UNALIGNED: plan selection must not depend on the buffer addresses,
    // or two generators of the same size could round differently and break
    // bitwise reproducibility across instances.
    plan_ = fftw_plan_dft_c2r_1d(horizon_, static_cast<fftw_complex*>(freq_buf_),
                                 time_buf_, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

ColoredNoiseGenerator::~ColoredNoiseGenerator() {
    if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    if (freq_buf_) fftw_free(freq_buf_);
    if (time_buf_) fftw_free(time_buf_);
}

Eigen::MatrixXd ColoredNoiseGenerator::sample(double beta, int dims, Rng& rng) {
    require(beta >= 0.0, "colored noise exponent must be nonnegative");
    require(dims >= 1, "colored noise needs at least one dim");
    Eigen::MatrixXd out(horizon_, dims);

    if (horizon_ == 1) {
        for (int j = 0; j < dims; ++j) out(0, j) = rng.normal();
        return out;
    }

    auto* freq = static_cast<fftw_complex*>(freq_buf_);
    const int nfreq = horizon_ / 2 + 1;
    const bool even = horizon_ % 2 == 0;

    for (int j = 0; j < dims; ++j) {
        freq[0][0] = 0.0;  // DC zeroed: the raw series has zero mean
        freq[0][1] = 0.0;
        for (int k = 1; k < nfreq; ++k) {
            const double scale = std::pow(static_cast<double>(k), -beta / 2.0);
            freq[k][0] = scale * rng.normal();
            // The Nyquist coefficient of an even-length real signal is real.
            freq[k][1] = (even && k == nfreq - 1) ? 0.0 : scale * rng.normal();
        }
        fftw_execute(static_cast<fftw_plan>(plan_));

        Eigen::Map<Eigen::VectorXd> col(time_buf_, horizon_);
        const double mean = col.mean();
        double var = (col.array() - mean).square().mean();
        if (var < 1e-300) var = 1e-300;  // measure-zero degenerate draw
        out.col(j) = (col.array() - mean) / std::sqrt(var);
    }
    return out;
}

Eigen::MatrixXd colored_noise(double beta, int horizon, int dims, Rng& rng) {
    ColoredNoiseGenerator gen(horizon);
    return gen.sample(beta, dims, rng);
}

}  // namespace riskplan
