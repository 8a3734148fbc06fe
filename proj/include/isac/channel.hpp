#pragma once
// Doubly-selective channel H_j = sum_q h_q Pi^{l_q} Delta^{k_q}, applied in
// the time domain, plus the effective delay-Doppler operator
// Hbar_j = sum_q h_q T(l_q, k_q).

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "isac/modem.hpp"

namespace isac {

struct ChannelPath {
    cplx gain{1.0, 0.0};
    double delay_s = 0.0;     // tau
    double doppler_hz = 0.0;  // nu
    long delay_idx = 0;       // l = round(tau * M * delta_f), samples
    double doppler_idx = 0.0; // k = nu * N * T, bins (fractional allowed)
};

// Quantizes the physical delay to the nearest sample; Doppler stays fractional.
ChannelPath make_path(cplx gain, double delay_s, double doppler_hz,
                      const FrameConfig& cfg);

struct ChannelRealization {
    std::vector<ChannelPath> paths;
    double noise_var = 0.0;  // sigma^2 per complex sample

    void validate(const FrameConfig& cfg) const;
};

// r = H s + n with n ~ CN(0, sigma^2 I). Deterministic for a given seed.
std::vector<cplx> apply_channel(std::span<const cplx> s,
                                const ChannelRealization& ch,
                                const FrameConfig& cfg, std::uint64_t seed);

// sigma^2 = signal_power / 10^(snr_db / 10)
double snr_to_noise_var(double snr_db, double signal_power);

// Effective delay-Doppler channel. Applies matrix-free; dense() materializes
// the M*N x M*N matrix for small grids (MMSE detection, oracle tests).
class DDChannelOp {
public:
    DDChannelOp(const ChannelRealization& ch, const FrameConfig& cfg);
    DDChannelOp(std::vector<ChannelPath> paths, const FrameConfig& cfg);

    void apply(const cplx* in, cplx* out) const;          // Hbar * x
    void apply_adjoint(const cplx* in, cplx* out) const;  // Hbar^H * x
    std::vector<cplx> apply(std::span<const cplx> in) const;
    std::vector<cplx> apply_adjoint(std::span<const cplx> in) const;

    Eigen::MatrixXcd dense() const;

    std::size_t dim() const { return modem_.dim(); }
    const std::vector<ChannelPath>& paths() const { return paths_; }
    const Modem& modem() const { return modem_; }

    // sum_q |h_q|, an upper bound on the spectral norm (each T is unitary).
    double gain_l1() const;

private:
    Modem modem_;
    std::vector<ChannelPath> paths_;
    std::vector<std::vector<cplx>> ramps_;  // per-path Delta^{k_q} diagonal
};

DDChannelOp effective_dd_channel(const ChannelRealization& ch,
                                 const FrameConfig& cfg);

}  // namespace isac
